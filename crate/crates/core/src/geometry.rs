//! Ellipsoid center of the arm hull and its Carathéodory decomposition.
//!
//! The exploration distribution of the warm-up phase must have mean equal to a
//! point `c` of `conv(X)` such that `c - (x - c)/d ∈ conv(X)` for every arm `x`.
//! The center of the minimum-volume enclosing (Löwner) ellipsoid has this
//! property: the ellipsoid shrunk by `1/d` about its center lies inside the
//! hull. The MVEE is computed on the lifted points `(x, 1)` as a D-optimal
//! design (Khachiyan's iteration with Wolfe-Atwood away steps), so the center
//! is by construction the weight-barycenter of the points.

use alloc::vec;
use alloc::vec::Vec;

use crate::arms::ArmSet;
use crate::design::{frank_wolfe, volumetric_start, DesignWeights, FrankWolfeOptions};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, orthonormal_span, SymMatrix};

/// Default containment slack for geometry routines.
pub const DEFAULT_EPS: f64 = 1e-6;
/// Slack used inside bandit runs.
pub const RUN_EPS: f64 = 1e-3;
const DEFAULT_MAX_ITER: usize = 1_000_000;
const RANK_TOL: f64 = 1e-9;

/// `{x : (x - c)ᵀ H (x - c) ≤ 1}`
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub shape: SymMatrix,
}

impl Ellipsoid {
    /// `(x - c)ᵀ H (x - c)`
    pub fn shape_norm_sq(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.shape.quad_form(&diff)
    }
}

/// Output of [`mvee`].
#[derive(Debug, Clone)]
pub struct Mvee {
    pub ellipsoid: Ellipsoid,
    /// Barycentric weights with `Σ w_i p_i = center`.
    pub weights: Vec<f64>,
    pub iterations: usize,
}

/// Minimum-volume enclosing ellipsoid, accurate to `(1 + eps)` containment.
pub fn mvee(points: &ArmSet, eps: f64, max_iter: usize) -> Result<Mvee> {
    if !(eps > 0.0) {
        return Err(crate::error::invalid("eps must be positive"));
    }
    let d = points.dim();
    let rank = affine_rank(points);
    if rank < d {
        return Err(Error::AffinelyDegenerate { rank, dim: d });
    }
    let lifted = points.lifted();
    let start = volumetric_start(&lifted)?;
    let weights = DesignWeights::uniform_over(points.len(), &start)?;
    let df = d as f64;
    // max lifted leverage ≤ (d+1)(1+tol) ⇔ max (x-c)ᵀH(x-c) ≤ 1 + eps
    let tol = df * eps / (df + 1.0);
    let out = frank_wolfe(
        &lifted,
        weights.weights().to_vec(),
        FrankWolfeOptions {
            tol,
            max_iter,
            away_steps: true,
        },
    )?;
    let ellipsoid = ellipsoid_from_weights(points, &out.weights)?;
    Ok(Mvee {
        ellipsoid,
        weights: out.weights,
        iterations: out.iterations,
    })
}

/// Ellipsoid `{(x-c)ᵀ Σ⁻¹ (x-c) ≤ d}` of the weighted point cloud, where `c`
/// and `Σ` are its weighted mean and covariance.
fn ellipsoid_from_weights(points: &ArmSet, weights: &[f64]) -> Result<Ellipsoid> {
    let d = points.dim();
    let center = barycenter(points, weights);
    let mut cov = SymMatrix::zeros(d);
    let mut diff = vec![0.0; d];
    for (p, w) in points.iter().zip(weights) {
        if *w > 0.0 {
            for ((z, x), c) in diff.iter_mut().zip(p).zip(&center) {
                *z = x - c;
            }
            cov.add_outer(&diff, *w);
        }
    }
    let mut shape = cov.inverse().ok_or(Error::SingularMatrix)?;
    shape.scale(1.0 / d as f64);
    Ok(Ellipsoid { center, shape })
}

pub fn barycenter(points: &ArmSet, weights: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; points.dim()];
    for (p, w) in points.iter().zip(weights) {
        if *w != 0.0 {
            for (ci, x) in c.iter_mut().zip(p) {
                *ci += w * x;
            }
        }
    }
    c
}

/// Affine hull of a point set: an origin plus an orthonormal basis.
#[derive(Debug, Clone)]
pub struct AffineHull {
    pub origin: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

impl AffineHull {
    pub fn of(points: &ArmSet) -> Self {
        let origin = barycenter(points, &vec![1.0 / points.len() as f64; points.len()]);
        let centered: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.iter().zip(&origin).map(|(x, o)| x - o).collect())
            .collect();
        let (basis, _) = orthonormal_span(centered.iter().map(|v| v.as_slice()), RANK_TOL);
        Self { origin, basis }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn lift(&self, coords: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for (c, b) in coords.iter().zip(&self.basis) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += c * bi;
            }
        }
        x
    }
}

pub fn affine_rank(points: &ArmSet) -> usize {
    AffineHull::of(points).rank()
}

/// A convex combination of at most `d + 1` arms.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterDistribution {
    pub atom_indices: Vec<usize>,
    pub atom_weights: Vec<f64>,
    /// The point `Σ α_i y_i`.
    pub center: Vec<f64>,
}

impl CenterDistribution {
    pub fn len(&self) -> usize {
        self.atom_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atom_indices.is_empty()
    }

    /// `E_{x∼U} ⟨x, θ⟩`
    pub fn expected_inner(&self, arms: &ArmSet, theta: &[f64]) -> f64 {
        self.atom_indices
            .iter()
            .zip(&self.atom_weights)
            .map(|(&i, w)| w * dot(arms.arm(i), theta))
            .sum()
    }

    /// Arm index for a uniform draw `u ∈ [0, 1)` by inverse CDF.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (&i, w) in self.atom_indices.iter().zip(&self.atom_weights) {
            acc += w;
            if u < acc {
                return i;
            }
        }
        *self.atom_indices.last().expect("nonempty distribution")
    }
}

fn scale_of(points: &ArmSet, target: &[f64]) -> f64 {
    points.max_norm().max(norm(target)).max(1.0)
}

/// Reduces a convex combination to at most `d + 1` of the input points with the
/// same weighted sum.
pub fn caratheodory_reduce(
    points: &ArmSet,
    weights: &[f64],
    target: &[f64],
) -> Result<CenterDistribution> {
    let d = points.dim();
    if weights.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: weights.len(),
        });
    }
    if target.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: target.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(crate::error::invalid("weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(crate::error::invalid("weights must sum to 1"));
    }
    let scale = scale_of(points, target);
    let residual = |w: &[f64]| {
        let c = barycenter(points, w);
        norm(&c.iter().zip(target).map(|(a, b)| a - b).collect::<Vec<_>>())
    };
    let r0 = residual(weights);
    if r0 > 1e-8 * scale {
        return Err(Error::InconsistentCombination { residual: r0 });
    }

    let mut w = weights.to_vec();
    let mut active: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    while active.len() > d + 1 {
        let group = &active[..d + 2];
        let eta = affine_dependence(points, group);
        // the largest step keeping every weight nonnegative
        let mut ratio = f64::INFINITY;
        let mut hit = usize::MAX;
        for (k, &i) in group.iter().enumerate() {
            if eta[k] > 0.0 {
                let r = w[i] / eta[k];
                if r < ratio {
                    ratio = r;
                    hit = i;
                }
            }
        }
        debug_assert!(hit != usize::MAX, "affine dependence has a positive entry");
        for (k, &i) in group.iter().enumerate() {
            w[i] = (w[i] - ratio * eta[k]).max(0.0);
        }
        w[hit] = 0.0;
        active.retain(|&i| w[i] > 0.0);
    }
    let total: f64 = active.iter().map(|&i| w[i]).sum();
    let atom_weights: Vec<f64> = active.iter().map(|&i| w[i] / total).collect();
    let mut full = vec![0.0; points.len()];
    for (&i, a) in active.iter().zip(&atom_weights) {
        full[i] = *a;
    }
    let center = barycenter(points, &full);
    let r = residual(&full);
    if r > 1e-8 * scale {
        return Err(Error::InconsistentCombination { residual: r });
    }
    Ok(CenterDistribution {
        atom_indices: active,
        atom_weights,
        center,
    })
}

/// Nonzero `η` over `group` (|group| = d + 2) with `Σ η_i (p_i, 1) = 0`.
fn affine_dependence(points: &ArmSet, group: &[usize]) -> Vec<f64> {
    let d = points.dim();
    let rows = d + 1;
    let cols = group.len();
    let mut m = vec![0.0; rows * cols];
    for (k, &i) in group.iter().enumerate() {
        let p = points.arm(i);
        for r in 0..d {
            m[r * cols + k] = p[r];
        }
        m[d * cols + k] = 1.0;
    }
    // reduced row echelon form with partial pivoting
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    let scale = m.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
    for col in 0..cols {
        if row == rows {
            break;
        }
        let mut best = row;
        for r in row..rows {
            if libm::fabs(m[r * cols + col]) > libm::fabs(m[best * cols + col]) {
                best = r;
            }
        }
        if libm::fabs(m[best * cols + col]) <= 1e-12 * scale {
            continue;
        }
        for c in 0..cols {
            m.swap(row * cols + c, best * cols + c);
        }
        let p = m[row * cols + col];
        for c in 0..cols {
            m[row * cols + c] /= p;
        }
        for r in 0..rows {
            if r != row {
                let f = m[r * cols + col];
                if f != 0.0 {
                    for c in 0..cols {
                        m[r * cols + c] -= f * m[row * cols + c];
                    }
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    let free = (0..cols)
        .find(|c| !pivot_cols.contains(c))
        .expect("d + 2 columns in d + 1 rows always leave a free column");
    let mut eta = vec![0.0; cols];
    eta[free] = 1.0;
    for (r, &pc) in pivot_cols.iter().enumerate() {
        eta[pc] = -m[r * cols + free];
    }
    if !eta.iter().any(|v| *v > 0.0) {
        eta.iter_mut().for_each(|v| *v = -*v);
    }
    eta
}

/// Distribution over at most `d + 1` arms whose mean is the MVEE center of the
/// arms. Rank-deficient arm sets are handled inside their affine hull.
pub fn center_distribution(arms: &ArmSet, eps: f64) -> Result<CenterDistribution> {
    let n = arms.len();
    if n == 0 {
        return Err(Error::EmptyArmSet);
    }
    let hull = AffineHull::of(arms);
    let weights = if hull.rank() == 0 {
        let mut w = vec![0.0; n];
        w[0] = 1.0;
        w
    } else if hull.rank() == arms.dim() {
        mvee(arms, eps, DEFAULT_MAX_ITER)?.weights
    } else {
        let coords = arms.project(&hull.origin, &hull.basis);
        mvee(&coords, eps, DEFAULT_MAX_ITER)?.weights
    };
    let center = barycenter(arms, &weights);
    caratheodory_reduce(arms, &weights, &center)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn mvee_segment() {
        let pts = ArmSet::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        let m = mvee(&pts, 1e-9, 1000).unwrap();
        assert!(m.ellipsoid.center[0].abs() < 1e-12);
        assert!((m.ellipsoid.shape.get(0, 0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mvee_cross() {
        let pts = ArmSet::from_rows(&[
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ])
        .unwrap();
        let m = mvee(&pts, 1e-9, 1000).unwrap();
        assert!(norm(&m.ellipsoid.center) < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((m.ellipsoid.shape.get(i, j) - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn mvee_degenerate() {
        let pts = ArmSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(
            mvee(&pts, 1e-6, 100).unwrap_err(),
            Error::AffinelyDegenerate { rank: 1, dim: 2 }
        );
    }

    #[test]
    fn caratheodory_single_point() {
        let pts = ArmSet::from_rows(&[vec![0.3, 0.4]]).unwrap();
        let c = caratheodory_reduce(&pts, &[1.0], &[0.3, 0.4]).unwrap();
        assert_eq!(c.atom_indices, vec![0]);
        assert_eq!(c.atom_weights, vec![1.0]);
    }

    #[test]
    fn caratheodory_line() {
        let pts = ArmSet::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let c = caratheodory_reduce(&pts, &[0.25, 0.5, 0.25], &[1.0]).unwrap();
        assert!(c.len() <= 2);
        assert!((c.center[0] - 1.0).abs() < 1e-12);
        assert!((c.atom_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn caratheodory_inconsistent() {
        let pts = ArmSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(
            caratheodory_reduce(&pts, &[0.5, 0.5], &[0.7]),
            Err(Error::InconsistentCombination { .. })
        ));
    }

    #[test]
    fn center_of_single_arm() {
        let arms = ArmSet::from_rows(&[vec![0.2, 0.9, 0.1]]).unwrap();
        let c = center_distribution(&arms, DEFAULT_EPS).unwrap();
        assert_eq!(c.atom_indices, vec![0]);
        assert_eq!(c.atom_weights, vec![1.0]);
    }

    #[test]
    fn center_of_collinear_arms_uses_affine_hull() {
        let arms =
            ArmSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![3.0, 3.0], vec![2.0, 2.0]])
                .unwrap();
        let c = center_distribution(&arms, DEFAULT_EPS).unwrap();
        // MVEE of a segment is centered at its midpoint
        assert!((c.center[0] - 1.5).abs() < 1e-6);
        assert!(c.len() <= 3);
    }

    #[test]
    fn sample_with_inverse_cdf() {
        let c = CenterDistribution {
            atom_indices: vec![4, 7],
            atom_weights: vec![0.25, 0.75],
            center: vec![],
        };
        assert_eq!(c.sample_with(0.0), 4);
        assert_eq!(c.sample_with(0.2499), 4);
        assert_eq!(c.sample_with(0.25), 7);
        assert_eq!(c.sample_with(0.9999), 7);
    }
}
