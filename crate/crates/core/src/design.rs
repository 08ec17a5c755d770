//! D-optimal experimental design over a finite arm set.
//!
//! The design `λ` maximizes `log det U(λ)` with `U(λ) = Σ λ_x x xᵀ`; by the
//! Kiefer-Wolfowitz equivalence the same `λ` minimizes the worst-case leverage
//! `g(λ) = max_x xᵀ U(λ)⁻¹ x`, whose optimal value is `d`. The solver is
//! Frank-Wolfe with exact line search, certified by `g(λ) ≤ (1 + tol)·d`.

use alloc::vec;
use alloc::vec::Vec;

use crate::arms::{argmax, ArmSet};
use crate::error::{invalid, Error, Result};
use crate::linalg::{convex_rank_one_inverse, dot, orthonormal_span, SymMatrix};

/// Default stopping tolerance: stop once `g(λ) ≤ 1.05·d`.
pub const DEFAULT_TOL: f64 = 0.05;
/// Default Frank-Wolfe iteration budget.
pub const DEFAULT_MAX_ITER: usize = 100_000;

const REFACTOR_EVERY: usize = 50;
const RANK_TOL: f64 = 1e-9;

/// A probability vector over arm indices with its explicit support.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignWeights {
    weights: Vec<f64>,
    support: Vec<usize>,
}

impl DesignWeights {
    /// Validates nonnegativity and normalization (within 1e-9), then
    /// renormalizes exactly.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyArmSet);
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("design weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("design weights must sum to 1"));
        }
        Ok(Self::normalized(weights))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::uniform_over(n, &(0..n).collect::<Vec<_>>())
    }

    pub fn uniform_over(n: usize, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyArmSet);
        }
        let mut w = vec![0.0; n];
        for &i in indices {
            if i >= n {
                return Err(Error::ArmIndex { index: i, len: n });
            }
            w[i] = 1.0;
        }
        Ok(Self::normalized(w))
    }

    pub fn point_mass(n: usize, index: usize) -> Result<Self> {
        Self::uniform_over(n, &[index])
    }

    fn normalized(mut weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
            .collect();
        Self { weights, support }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `U(λ) = Σ λ_x x xᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix(SymMatrix);

impl InfoMatrix {
    pub fn matrix(&self) -> &SymMatrix {
        &self.0
    }

    pub fn into_inner(self) -> SymMatrix {
        self.0
    }
}

fn check_compatible(arms: &ArmSet, weights: &DesignWeights) -> Result<()> {
    if weights.len() != arms.len() {
        return Err(Error::DimensionMismatch {
            expected: arms.len(),
            found: weights.len(),
        });
    }
    Ok(())
}

fn accumulate(arms: &ArmSet, weights: &[f64]) -> SymMatrix {
    let mut u = SymMatrix::zeros(arms.dim());
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            u.add_outer(arms.arm(i), *w);
        }
    }
    u
}

pub fn information_matrix(arms: &ArmSet, weights: &DesignWeights) -> Result<InfoMatrix> {
    check_compatible(arms, weights)?;
    Ok(InfoMatrix(accumulate(arms, weights.weights())))
}

fn require_nonsingular(u: &SymMatrix) -> Result<()> {
    let trace = u.trace();
    if !(trace > 0.0) || u.eigen().min() <= 1e-10 * trace {
        return Err(Error::SingularMatrix);
    }
    Ok(())
}

/// `g(λ) = max_x xᵀ U(λ)⁻¹ x`.
pub fn g_value(arms: &ArmSet, weights: &DesignWeights) -> Result<f64> {
    check_compatible(arms, weights)?;
    let u = accumulate(arms, weights.weights());
    require_nonsingular(&u)?;
    let chol = u.cholesky().ok_or(Error::SingularMatrix)?;
    Ok(arms
        .iter()
        .map(|a| {
            let y = chol.solve_lower(a);
            dot(&y, &y)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `log det U(λ)`.
pub fn log_det(arms: &ArmSet, weights: &DesignWeights) -> Result<f64> {
    check_compatible(arms, weights)?;
    accumulate(arms, weights.weights())
        .cholesky()
        .map(|c| c.log_det())
        .ok_or(Error::SingularMatrix)
}

/// Settings for the Frank-Wolfe engine.
#[derive(Debug, Clone, Copy)]
pub struct FrankWolfeOptions {
    /// Stop once `max leverage ≤ (1 + tol)·dim`.
    pub tol: f64,
    pub max_iter: usize,
    /// Allow away (mass-removing) steps on the support.
    pub away_steps: bool,
}

/// Raw result of the Frank-Wolfe iteration.
#[derive(Debug, Clone)]
pub struct FrankWolfeOutcome {
    pub weights: Vec<f64>,
    /// Maximum leverage at `weights`, from a fresh factorization.
    pub g: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `log det U` before the first step and after each step.
    pub log_det_history: Vec<f64>,
}

struct FwState<'a> {
    arms: &'a ArmSet,
    weights: Vec<f64>,
    inv: SymMatrix,
    leverage: Vec<f64>,
    log_det: f64,
    stale: usize,
}

impl<'a> FwState<'a> {
    fn new(arms: &'a ArmSet, weights: Vec<f64>) -> Result<Self> {
        let mut s = Self {
            arms,
            weights,
            inv: SymMatrix::zeros(arms.dim()),
            leverage: vec![0.0; arms.len()],
            log_det: 0.0,
            stale: 0,
        };
        s.refresh()?;
        Ok(s)
    }

    fn refresh(&mut self) -> Result<()> {
        let u = accumulate(self.arms, &self.weights);
        let chol = u.cholesky().ok_or(Error::SingularMatrix)?;
        self.log_det = chol.log_det();
        self.inv = chol.inverse();
        for (l, a) in self.leverage.iter_mut().zip(self.arms.iter()) {
            let y = chol.solve_lower(a);
            *l = dot(&y, &y);
        }
        self.stale = 0;
        Ok(())
    }

    /// Moves to `(1-γ)λ + γ e_atom`, updating the inverse and every leverage
    /// in O(n·d + d²).
    fn step(&mut self, atom: usize, gamma: f64, drop_atom: bool) -> Result<()> {
        let dim = self.arms.dim() as f64;
        let a = self.arms.arm(atom);
        let w = self.inv.mul_vec(a);
        let la = self.leverage[atom];
        let kappa = convex_rank_one_inverse(&mut self.inv, &w, la, gamma);
        let shrink = 1.0 / (1.0 - gamma);
        for (l, x) in self.leverage.iter_mut().zip(self.arms.iter()) {
            let u = dot(x, &w);
            *l = (*l - kappa * u * u) * shrink;
        }
        self.weights.iter_mut().for_each(|v| *v *= 1.0 - gamma);
        if drop_atom {
            self.weights[atom] = 0.0;
        } else {
            self.weights[atom] += gamma;
        }
        let c = gamma / (1.0 - gamma);
        self.log_det += dim * libm::log(1.0 - gamma) + libm::log(1.0 + c * la);
        self.stale += 1;
        if self.stale >= REFACTOR_EVERY {
            self.refresh()?;
        }
        Ok(())
    }
}

/// Optimal line-search step toward (γ > 0) or away from (γ < 0) an atom whose
/// current leverage is `leverage`, in dimension `dim`.
pub fn line_search_step(leverage: f64, dim: f64) -> f64 {
    (leverage / dim - 1.0) / (leverage - 1.0)
}

/// Frank-Wolfe ascent on `log det U(λ)` from `start`, which must give a
/// nonsingular `U`.
pub fn frank_wolfe(
    arms: &ArmSet,
    start: Vec<f64>,
    opts: FrankWolfeOptions,
) -> Result<FrankWolfeOutcome> {
    if start.len() != arms.len() {
        return Err(Error::DimensionMismatch {
            expected: arms.len(),
            found: start.len(),
        });
    }
    let dim = arms.dim() as f64;
    let target = (1.0 + opts.tol) * dim;
    let mut st = FwState::new(arms, start)?;
    let mut history = vec![st.log_det];
    let mut iterations = 0;
    let converged = loop {
        let mut best = argmax(&st.leverage);
        if st.leverage[best] <= target {
            if st.stale == 0 {
                break true;
            }
            st.refresh()?;
            best = argmax(&st.leverage);
            if st.leverage[best] <= target {
                break true;
            }
        }
        if iterations >= opts.max_iter {
            break false;
        }
        let g = st.leverage[best];
        let mut moved = false;
        if opts.away_steps {
            let mut worst = usize::MAX;
            for (i, w) in st.weights.iter().enumerate() {
                if *w > 0.0 && (worst == usize::MAX || st.leverage[i] < st.leverage[worst]) {
                    worst = i;
                }
            }
            if worst != usize::MAX {
                let lw = st.leverage[worst];
                let wt = st.weights[worst];
                if dim - lw > g - dim && wt < 1.0 - 1e-12 {
                    let floor = -wt / (1.0 - wt);
                    let (gamma, drop) = if lw <= 1.0 {
                        (floor, true)
                    } else {
                        let gamma = line_search_step(lw, dim);
                        if gamma <= floor {
                            (floor, true)
                        } else {
                            (gamma, false)
                        }
                    };
                    st.step(worst, gamma, drop)?;
                    moved = true;
                }
            }
        }
        if !moved {
            let gamma = line_search_step(g, dim);
            st.step(best, gamma, false)?;
        }
        history.push(st.log_det);
        iterations += 1;
    };
    if st.stale > 0 {
        st.refresh()?;
    }
    let total: f64 = st.weights.iter().sum();
    st.weights.iter_mut().for_each(|w| *w /= total);
    let g = st.leverage.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FrankWolfeOutcome {
        weights: st.weights,
        g,
        iterations,
        converged,
        log_det_history: history,
    })
}

/// Starter set: `d` arms picked greedily by volume gain, then up to `d` more
/// by leverage against the first picks. Fails when the arms do not span `R^d`.
pub fn volumetric_start(arms: &ArmSet) -> Result<Vec<usize>> {
    let dim = arms.dim();
    let (basis, mut picks) = orthonormal_span(arms.iter(), RANK_TOL);
    if basis.len() < dim {
        return Err(Error::RankDeficient {
            rank: basis.len(),
            dim,
        });
    }
    let mut m = SymMatrix::zeros(dim);
    for &i in &picks {
        m.add_outer(arms.arm(i), 1.0);
    }
    let chol = m.cholesky().ok_or(Error::SingularMatrix)?;
    let mut inv = chol.inverse();
    let mut leverage: Vec<f64> = arms
        .iter()
        .map(|a| {
            let y = chol.solve_lower(a);
            dot(&y, &y)
        })
        .collect();
    for &i in &picks {
        leverage[i] = f64::NEG_INFINITY;
    }
    let extra = dim.min(arms.len() - picks.len());
    for _ in 0..extra {
        let k = argmax(&leverage);
        if leverage[k] == f64::NEG_INFINITY {
            break;
        }
        picks.push(k);
        // M ← M + a aᵀ, Sherman-Morrison on the inverse and on leverages
        let a = arms.arm(k);
        let w = inv.mul_vec(a);
        let denom = 1.0 + dot(a, &w);
        inv.add_outer(&w, -1.0 / denom);
        for (l, x) in leverage.iter_mut().zip(arms.iter()) {
            if *l != f64::NEG_INFINITY {
                let u = dot(x, &w);
                *l -= u * u / denom;
            }
        }
        leverage[k] = f64::NEG_INFINITY;
    }
    picks.sort_unstable();
    Ok(picks)
}

/// A solved design together with its certificate.
#[derive(Debug, Clone)]
pub struct DesignSolution {
    pub weights: DesignWeights,
    /// `g(λ)` of the returned weights.
    pub g: f64,
    pub iterations: usize,
    /// Set when pruning could not reach the support cap without making
    /// `U` singular.
    pub prune_warning: bool,
}

/// Solves the D-optimal design over `arms` and prunes the support to at most
/// `d(d+1)/2` atoms. Guarantees `g(λ) ≤ (1 + tol)·d` on success.
pub fn solve_d_optimal(arms: &ArmSet, tol: f64, max_iter: usize) -> Result<DesignSolution> {
    if !(tol > 0.0) {
        return Err(invalid("design tolerance must be positive"));
    }
    if max_iter == 0 {
        return Err(invalid("design iteration budget must be at least 1"));
    }
    let dim = arms.dim();
    let n = arms.len();
    let target = (1.0 + tol) * dim as f64;
    let cap = dim * (dim + 1) / 2;
    let start = volumetric_start(arms)?;
    let mut weights = DesignWeights::uniform_over(n, &start)?.weights;
    let mut used = 0;
    let opts = FrankWolfeOptions {
        tol: tol / 2.0,
        max_iter,
        away_steps: true,
    };
    for round in 0..8 {
        // Each retry converges further so small atoms fade out before pruning.
        let out = frank_wolfe(
            arms,
            weights,
            FrankWolfeOptions {
                max_iter: max_iter - used,
                tol: opts.tol / f64::from(1u32 << round),
                ..opts
            },
        )?;
        used += out.iterations;
        if !out.converged {
            return Err(Error::NotConverged {
                achieved: out.g,
                target,
                iterations: used,
            });
        }
        let mut pruned = prune_support(arms, &DesignWeights::normalized(out.weights.clone()), cap)?;
        if pruned.g > target {
            // Greedy pruning picked a poor support; reduce with `U` held fixed
            // first so at most one atom has to go.
            if let Ok(reduced) = moment_reduce(arms, &out.weights) {
                let alt = prune_support(arms, &reduced, cap)?;
                if alt.g < pruned.g {
                    pruned = alt;
                }
            }
        }
        if pruned.g <= target || used >= max_iter {
            if pruned.g > target {
                return Err(Error::NotConverged {
                    achieved: pruned.g,
                    target,
                    iterations: used,
                });
            }
            return Ok(DesignSolution {
                weights: pruned.weights,
                g: pruned.g,
                iterations: used,
                prune_warning: pruned.singular,
            });
        }
        weights = pruned.weights.weights;
    }
    let g = g_value(arms, &DesignWeights::normalized(weights))?;
    Err(Error::NotConverged {
        achieved: g,
        target,
        iterations: used,
    })
}

/// Like [`solve_d_optimal`], but when the arms only span an `r < d`
/// dimensional subspace the design is solved in coordinates of that subspace.
/// The reported `g` is then relative to `r`.
pub fn solve_d_optimal_in_span(
    arms: &ArmSet,
    tol: f64,
    max_iter: usize,
) -> Result<DesignSolution> {
    let (basis, _) = orthonormal_span(arms.iter(), RANK_TOL);
    if basis.len() == arms.dim() {
        return solve_d_optimal(arms, tol, max_iter);
    }
    if basis.is_empty() {
        return Ok(DesignSolution {
            weights: DesignWeights::point_mass(arms.len(), 0)?,
            g: 0.0,
            iterations: 0,
            prune_warning: false,
        });
    }
    let origin = vec![0.0; arms.dim()];
    let projected = arms.project(&origin, &basis);
    solve_d_optimal(&projected, tol, max_iter)
}

/// Result of [`prune_support`].
#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub weights: DesignWeights,
    /// `g(λ)` after pruning.
    pub g: f64,
    /// Pruning stopped early because every further removal made `U` singular.
    pub singular: bool,
}

/// Thins a design to at most `cap` atoms.
///
/// Weights below `1e-6/|support|` are dropped first. While the support is
/// still above `cap`, the atom whose removal costs the least `log det U`
/// (smallest weight on ties) is removed and the remaining weights are
/// re-balanced by a short Frank-Wolfe pass restricted to the support.
pub fn prune_support(arms: &ArmSet, weights: &DesignWeights, cap: usize) -> Result<PruneOutcome> {
    check_compatible(arms, weights)?;
    let dim = arms.dim();
    if cap < dim {
        return Err(invalid("support cap must be at least the dimension"));
    }
    let threshold = 1e-6 / weights.support().len() as f64;
    let mut w: Vec<f64> = weights
        .weights()
        .iter()
        .map(|v| if *v < threshold { 0.0 } else { *v })
        .collect();
    let mut current = DesignWeights::normalized(core::mem::take(&mut w));
    let mut singular = false;
    while current.support().len() > cap {
        let support = current.support().to_vec();
        let u = accumulate(arms, current.weights());
        let Some(chol) = u.cholesky() else {
            singular = true;
            break;
        };
        let mut best: Option<(usize, f64)> = None;
        for &i in &support {
            let y = chol.solve_lower(arms.arm(i));
            let lev = dot(&y, &y);
            let lam = current.weight(i);
            let keep = 1.0 - lam * lev;
            if keep <= 1e-12 {
                continue;
            }
            // log det of the renormalized remainder minus the current log det
            let loss = -(libm::log(keep) - dim as f64 * libm::log(1.0 - lam));
            let better = match best {
                None => true,
                Some((j, l)) => loss < l || (loss == l && lam < current.weight(j)),
            };
            if better {
                best = Some((i, loss));
            }
        }
        let Some((drop, _)) = best else {
            singular = true;
            break;
        };
        let remaining: Vec<usize> = support.iter().copied().filter(|&i| i != drop).collect();
        let mut next = current.weights().to_vec();
        next[drop] = 0.0;
        let next = DesignWeights::normalized(next);
        current = rebalance(arms, &remaining, next)?;
    }
    let g = match g_value(arms, &current) {
        Ok(g) => g,
        Err(Error::SingularMatrix) => {
            singular = true;
            f64::INFINITY
        }
        Err(e) => return Err(e),
    };
    Ok(PruneOutcome {
        weights: current,
        g,
        singular,
    })
}

/// Carathéodory reduction of `weights` in the space of `x xᵀ`: the result
/// has the same information matrix and at most `d(d+1)/2 + 1` atoms.
fn moment_reduce(arms: &ArmSet, weights: &[f64]) -> Result<DesignWeights> {
    let d = arms.dim();
    let support: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let lift = |x: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(d * (d + 1) / 2);
        for i in 0..d {
            for j in i..d {
                out.push(x[i] * x[j]);
            }
        }
        out
    };
    let rows: Vec<Vec<f64>> = support.iter().map(|&i| lift(arms.arm(i))).collect();
    let lifted = ArmSet::new(d * (d + 1) / 2, &rows)?;
    let total: f64 = support.iter().map(|&i| weights[i]).sum();
    let w: Vec<f64> = support.iter().map(|&i| weights[i] / total).collect();
    let mut target = vec![0.0; lifted.dim()];
    for (row, wi) in rows.iter().zip(&w) {
        for (t, v) in target.iter_mut().zip(row) {
            *t += wi * v;
        }
    }
    let red = crate::geometry::caratheodory_reduce(&lifted, &w, &target)?;
    let mut full = vec![0.0; arms.len()];
    for (&k, a) in red.atom_indices.iter().zip(&red.atom_weights) {
        full[support[k]] = *a;
    }
    Ok(DesignWeights::normalized(full))
}

/// Short Frank-Wolfe pass with away steps, restricted to `support`.
fn rebalance(arms: &ArmSet, support: &[usize], weights: DesignWeights) -> Result<DesignWeights> {
    let sub = arms.subset(support);
    let start: Vec<f64> = support.iter().map(|&i| weights.weight(i)).collect();
    if accumulate(&sub, &start).cholesky().is_none() {
        return Ok(weights);
    }
    let out = frank_wolfe(
        &sub,
        start,
        FrankWolfeOptions {
            tol: 1e-3,
            max_iter: 200,
            away_steps: true,
        },
    )?;
    let mut full = vec![0.0; arms.len()];
    for (k, &i) in support.iter().enumerate() {
        full[i] = out.weights[k];
    }
    Ok(DesignWeights::normalized(full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn basis(d: usize) -> ArmSet {
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut r = vec![0.0; d];
                r[i] = 1.0;
                r
            })
            .collect();
        ArmSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn information_matrix_single_atom() {
        let arms = basis(2);
        let w = DesignWeights::new(vec![1.0, 0.0]).unwrap();
        let u = information_matrix(&arms, &w).unwrap();
        assert_eq!(u.matrix().to_rows(), vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn information_matrix_uniform_basis() {
        for d in 1..6 {
            let arms = basis(d);
            let u = information_matrix(&arms, &DesignWeights::uniform(d).unwrap()).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let want = if i == j { 1.0 / d as f64 } else { 0.0 };
                    assert!((u.matrix().get(i, j) - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn information_matrix_diagonal_pair() {
        let arms = ArmSet::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let u = information_matrix(&arms, &DesignWeights::uniform(2).unwrap()).unwrap();
        assert_eq!(u.matrix().to_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn information_matrix_dimension_mismatch() {
        let arms = basis(3);
        let err = information_matrix(&arms, &DesignWeights::uniform(2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn g_value_examples() {
        for d in 1..6 {
            let g = g_value(&basis(d), &DesignWeights::uniform(d).unwrap()).unwrap();
            assert!((g - d as f64).abs() < 1e-12);
        }
        let g = g_value(&basis(2), &DesignWeights::new(vec![0.9, 0.1]).unwrap()).unwrap();
        assert!((g - 10.0).abs() < 1e-12);
    }

    #[test]
    fn g_value_singular() {
        let err = g_value(&basis(2), &DesignWeights::new(vec![1.0, 0.0]).unwrap()).unwrap_err();
        assert_eq!(err, Error::SingularMatrix);
    }

    #[test]
    fn solve_basis_is_uniform() {
        for d in 1..7 {
            let sol = solve_d_optimal(&basis(d), DEFAULT_TOL, 1000).unwrap();
            for w in sol.weights.weights() {
                assert!((w - 1.0 / d as f64).abs() < 1e-12);
            }
            assert_eq!(sol.iterations, 0);
        }
    }

    #[test]
    fn rank_deficient_rejected() {
        let arms = ArmSet::from_rows(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]])
            .unwrap();
        assert_eq!(
            solve_d_optimal(&arms, 0.05, 100).unwrap_err(),
            Error::RankDeficient { rank: 2, dim: 3 }
        );
        let sol = solve_d_optimal_in_span(&arms, 0.05, 100).unwrap();
        assert!(sol.g <= 2.0 * 1.05);
    }

    #[test]
    fn iteration_budget_exhaustion_reports_g() {
        // Two nearly collinear arms plus a far one make the uniform start poor.
        let arms = ArmSet::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 10.0],
            vec![10.0, -10.0],
        ])
        .unwrap();
        match solve_d_optimal(&arms, 1e-9, 1) {
            Err(Error::NotConverged { achieved, .. }) => assert!(achieved > 2.0),
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn prune_threshold_rule() {
        let s = 1.0 / 2f64.sqrt();
        let arms = ArmSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![s, s]]).unwrap();
        let w = DesignWeights::new(vec![0.5 - 1e-9, 0.5 - 1e-9, 2e-9]).unwrap();
        let out = prune_support(&arms, &w, 3).unwrap();
        assert_eq!(out.weights.support(), &[0, 1]);
        assert!((out.weights.weight(0) - 0.5).abs() < 1e-15);
        assert!((out.g - 2.0).abs() < 1e-9);
        assert!(!out.singular);
    }

    #[test]
    fn prune_under_cap_is_identity() {
        let arms = basis(4);
        let w = DesignWeights::uniform(4).unwrap();
        let out = prune_support(&arms, &w, 10).unwrap();
        assert_eq!(out.weights, w);
    }

    #[test]
    fn prune_cap_below_dim_rejected() {
        let arms = basis(3);
        assert!(prune_support(&arms, &DesignWeights::uniform(3).unwrap(), 2).is_err());
    }

    #[test]
    fn away_steps_reach_tight_tolerance() {
        let arms = ArmSet::from_rows(&[
            vec![1.0, 0.2],
            vec![-0.3, 1.0],
            vec![0.7, 0.7],
            vec![-0.9, -0.4],
            vec![0.1, -1.1],
        ])
        .unwrap();
        let start = DesignWeights::uniform(5).unwrap().weights().to_vec();
        let out = frank_wolfe(
            &arms,
            start,
            FrankWolfeOptions {
                tol: 1e-10,
                max_iter: 100_000,
                away_steps: true,
            },
        )
        .unwrap();
        assert!(out.converged);
        assert!(out.g <= 2.0 * (1.0 + 1e-10));
    }
}
