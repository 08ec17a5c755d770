//! Small dense linear algebra for symmetric matrices.
//!
//! Everything here is sized by the ambient dimension `d` of the arm vectors,
//! which stays in the tens, so plain row-major storage and O(d³) factorizations
//! are the right tool.

use alloc::vec;
use alloc::vec::Vec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Square matrix stored row-major. Used for symmetric matrices only; callers
/// keep both triangles in sync.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = scale;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *v;
        }
        m
    }

    /// Builds from rows; the input is symmetrized by averaging.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = 0.5 * (rows[i][j] + rows[j][i]);
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// `self += weight · x xᵀ`
    pub fn add_outer(&mut self, x: &[f64], weight: f64) {
        let n = self.dim;
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let wi = weight * x[i];
            if wi == 0.0 {
                continue;
            }
            let row = &mut self.data[i * n..(i + 1) * n];
            for (r, xj) in row.iter_mut().zip(x) {
                *r += wi * xj;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn add_assign(&mut self, other: &SymMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ M y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.dim).map(|i| x[i] * dot(self.row(i), y)).sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max(libm::fabs(self.get(i, j) - self.get(j, i)));
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)))
    }

    /// Cholesky factorization; `None` when a pivot falls below
    /// `1e-13 · max diagonal` (numerically singular or indefinite).
    pub fn cholesky(&self) -> Option<Cholesky> {
        let n = self.dim;
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(self.get(i, i)));
        if n > 0 && !(max_diag > 0.0) {
            return None;
        }
        let floor = 1e-13 * max_diag;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = self.get(j, j);
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if !(diag > floor) {
                return None;
            }
            let djj = libm::sqrt(diag);
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = v / djj;
            }
        }
        Some(Cholesky { dim: n, l })
    }

    pub fn inverse(&self) -> Option<SymMatrix> {
        self.cholesky().map(|c| c.inverse())
    }

    /// Symmetric eigendecomposition by cyclic Jacobi rotations.
    pub fn eigen(&self) -> SymEigen {
        jacobi_eigen(self)
    }
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Factor of `scale · I`.
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut l = vec![0.0; dim * dim];
        let s = libm::sqrt(scale);
        for i in 0..dim {
            l[i * dim + i] = s;
        }
        Self { dim, l }
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v -= self.l[i * n + k] * y[k];
            }
            y[i] = v / self.l[i * n + i];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in (i + 1)..n {
                v -= self.l[k * n + i] * x[k];
            }
            x[i] = v / self.l[i * n + i];
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim)
            .map(|i| libm::log(self.l[i * self.dim + i]))
            .sum::<f64>()
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim;
        let mut inv = SymMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv.data[i * n + j] = col[i];
            }
        }
        // enforce exact symmetry
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (inv.data[i * n + j] + inv.data[j * n + i]);
                inv.data[i * n + j] = avg;
                inv.data[j * n + i] = avg;
            }
        }
        inv
    }

    /// `L Lᵀ`
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (0..=j).map(|k| self.l[i * n + k] * self.l[j * n + k]).sum();
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// In-place update to the factor of `L Lᵀ + x xᵀ` in O(d²).
    pub fn rank_one_update(&mut self, x: &[f64]) {
        let n = self.dim;
        let mut w = x.to_vec();
        for k in 0..n {
            let lkk = self.l[k * n + k];
            let r = libm::hypot(lkk, w[k]);
            let c = r / lkk;
            let s = w[k] / lkk;
            self.l[k * n + k] = r;
            for i in (k + 1)..n {
                let lik = (self.l[i * n + k] + s * w[i]) / c;
                w[i] = c * w[i] - s * lik;
                self.l[i * n + k] = lik;
            }
        }
    }
}

/// Eigenvalues (ascending) with orthonormal eigenvectors stored as rows.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Minimum-norm solution of `M x = b` discarding eigenvalues below
    /// `rel_cutoff · λ_max`.
    pub fn pseudo_solve(&self, b: &[f64], rel_cutoff: f64) -> Vec<f64> {
        let n = b.len();
        let cutoff = rel_cutoff * self.max().max(0.0);
        let mut x = vec![0.0; n];
        for (value, vector) in self.values.iter().zip(&self.vectors) {
            if *value > cutoff && *value > 0.0 {
                let coef = dot(vector, b) / value;
                for (xi, vi) in x.iter_mut().zip(vector) {
                    *xi += coef * vi;
                }
            }
        }
        x
    }

    /// Eigenvectors whose eigenvalue exceeds `rel_cutoff · λ_max`.
    pub fn range_basis(&self, rel_cutoff: f64) -> Vec<Vec<f64>> {
        let cutoff = rel_cutoff * self.max().max(0.0);
        self.values
            .iter()
            .zip(&self.vectors)
            .filter(|(v, _)| **v > cutoff && **v > 0.0)
            .map(|(_, vec)| vec.clone())
            .collect()
    }
}

fn jacobi_eigen(m: &SymMatrix) -> SymEigen {
    let n = m.dim;
    let mut a = m.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if libm::sqrt(off) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if libm::fabs(apq) <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|k| v[k * n + j]).collect())
        .collect();
    SymEigen { values, vectors }
}

/// Solves `M x = b` for symmetric PSD `M`: Cholesky when it succeeds, otherwise
/// the eigen pseudo-inverse with spectral cutoff `1e-10 · λ_max`.
pub fn solve_psd(m: &SymMatrix, b: &[f64]) -> Vec<f64> {
    match m.cholesky() {
        Some(c) => c.solve(b),
        None => m.eigen().pseudo_solve(b, 1e-10),
    }
}

/// Replaces `inv = U⁻¹` by the inverse of `(1-γ) U + γ a aᵀ` where `w = U⁻¹ a`
/// and `leverage = aᵀ U⁻¹ a`. Returns the coefficient `κ` such that
/// `new_inv = (inv - κ w wᵀ) / (1-γ)`, which callers reuse for leverage updates.
pub fn convex_rank_one_inverse(
    inv: &mut SymMatrix,
    w: &[f64],
    leverage: f64,
    gamma: f64,
) -> f64 {
    let c = gamma / (1.0 - gamma);
    let kappa = c / (1.0 + c * leverage);
    inv.add_outer(w, -kappa);
    inv.scale(1.0 / (1.0 - gamma));
    kappa
}

/// Greedy Gram-Schmidt with largest-residual pivoting over `vectors`.
///
/// Returns an orthonormal basis of their span together with the pivot indices
/// (each pivot maximizes the volume gain of the vectors picked so far). A
/// residual below `rel_tol · max ‖v‖` counts as zero.
pub fn orthonormal_span<'a, I>(vectors: I, rel_tol: f64) -> (Vec<Vec<f64>>, Vec<usize>)
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let vs: Vec<&[f64]> = vectors.into_iter().collect();
    let Some(first) = vs.first() else {
        return (Vec::new(), Vec::new());
    };
    let dim = first.len();
    let mut residual: Vec<f64> = vs.iter().map(|v| dot(v, v)).collect();
    let scale = residual.iter().fold(0.0f64, |m, r| m.max(*r));
    let floor = rel_tol * rel_tol * scale;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();
    while basis.len() < dim {
        let mut best = usize::MAX;
        let mut best_r = floor;
        for (i, r) in residual.iter().enumerate() {
            if *r > best_r && !pivots.contains(&i) {
                best = i;
                best_r = *r;
            }
        }
        if best == usize::MAX {
            break;
        }
        // two passes of modified Gram-Schmidt for stability
        let mut q = vs[best].to_vec();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &q);
                for (qi, bi) in q.iter_mut().zip(b) {
                    *qi -= c * bi;
                }
            }
        }
        let qn = norm(&q);
        if !(qn * qn > floor) {
            break;
        }
        q.iter_mut().for_each(|v| *v /= qn);
        for (r, v) in residual.iter_mut().zip(&vs) {
            let c = dot(&q, v);
            *r = (*r - c * c).max(0.0);
        }
        residual[best] = 0.0;
        basis.push(q);
        pivots.push(best);
    }
    (basis, pivots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_spd() -> SymMatrix {
        SymMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
    }

    #[test]
    fn cholesky_solves() {
        let m = sample_spd();
        let b = [1.0, -2.0, 0.5];
        let x = m.cholesky().unwrap().solve(&b);
        let back = m.mul_vec(&x);
        for (u, v) in back.iter().zip(b.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_and_log_det() {
        let m = sample_spd();
        let chol = m.cholesky().unwrap();
        let inv = chol.inverse();
        for i in 0..3 {
            let col: Vec<f64> = (0..3).map(|k| inv.get(k, i)).collect();
            let e = m.mul_vec(&col);
            for (k, v) in e.iter().enumerate() {
                let want = if k == i { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
        let eig = m.eigen();
        let ld: f64 = eig.values.iter().map(|v| v.ln()).sum();
        assert!((ld - chol.log_det()).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_rejected_by_cholesky() {
        let mut m = SymMatrix::zeros(2);
        m.add_outer(&[1.0, 1.0], 1.0);
        assert!(m.cholesky().is_none());
        let x = solve_psd(&m, &[2.0, 2.0]);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_reconstructs() {
        let m = sample_spd();
        let eig = m.eigen();
        let mut r = SymMatrix::zeros(3);
        for (v, vec) in eig.values.iter().zip(&eig.vectors) {
            r.add_outer(vec, *v);
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((r.get(i, j) - m.get(i, j)).abs() < 1e-12);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cholesky_rank_one_update_matches_refactor() {
        let mut m = sample_spd();
        let mut chol = m.cholesky().unwrap();
        let x = [0.3, -1.2, 0.7];
        chol.rank_one_update(&x);
        m.add_outer(&x, 1.0);
        let b = [0.4, 0.1, -0.9];
        let a = chol.solve(&b);
        let e = m.cholesky().unwrap().solve(&b);
        for (u, v) in a.iter().zip(&e) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn convex_update_matches_direct_inverse() {
        let u = sample_spd();
        let mut inv = u.inverse().unwrap();
        let a = [1.0, 0.5, -0.3];
        let w = inv.mul_vec(&a);
        let lev = dot(&a, &w);
        let gamma = 0.2;
        convex_rank_one_inverse(&mut inv, &w, lev, gamma);
        let mut direct = u.clone();
        direct.scale(1.0 - gamma);
        direct.add_outer(&a, gamma);
        let want = direct.inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((inv.get(i, j) - want.get(i, j)).abs() < 1e-12);
            }
        }
    }
}
