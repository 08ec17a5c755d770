//! Sub-Poisson MGF bounds, multiplicative OLS tail bounds and Monte-Carlo
//! checks against them.
//!
//! Every Monte-Carlo verdict adds a 3σ sampling allowance to the bound side,
//! so a FAIL means the empirical quantity exceeds the bound by more than
//! sampling noise explains.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::RngCore;

use crate::arms::ArmSet;
use crate::env::RewardModel;
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, SymMatrix};

/// `exp(ν⁻¹·μ·(e^{νλ} − 1))`
pub fn mgf_bound(mean: f64, nu: f64, lambda: f64) -> f64 {
    libm::exp(mean / nu * libm::expm1(nu * lambda))
}

/// Sub-Poisson parameter `σ²/μ` of a nonnegative σ-sub-Gaussian variable
/// with mean `μ`.
pub fn sub_gaussian_nu(sigma: f64, mean: f64) -> f64 {
    sigma * sigma / mean
}

/// `3·√(p(1−p)/n)`
pub fn binomial_slack(p: f64, trials: usize) -> f64 {
    3.0 * libm::sqrt((p * (1.0 - p)).max(0.0) / trials as f64)
}

pub const MIN_MGF_SAMPLES: usize = 10_000;
pub const MIN_TAIL_TRIALS: usize = 1_000;
/// Relative standard error above which an empirical MGF is flagged as
/// unreliable.
pub const MGF_SE_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MgfCheck {
    pub lambda: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
    /// `std_error / empirical ≤ MGF_SE_LIMIT`
    pub converged: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MgfReport {
    pub claimed_nu: f64,
    pub mean: f64,
    pub samples: usize,
    pub checks: Vec<MgfCheck>,
}

impl MgfReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn violations(&self) -> impl Iterator<Item = &MgfCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Compares the empirical MGF of `sampler` at each `λ` with
/// [`mgf_bound`]`(mean, claimed_nu, λ)`. A grid point fails when
/// `empirical − 3·se > bound`. Heavy-tailed points (large relative standard
/// error) are flagged through `converged` rather than aborting.
pub fn check_sub_poisson<R, F>(
    mut sampler: F,
    claimed_nu: f64,
    mean: f64,
    lambda_grid: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<MgfReport>
where
    R: RngCore + ?Sized,
    F: FnMut(&mut R) -> f64,
{
    if !(claimed_nu > 0.0) {
        return Err(invalid("claimed nu must be positive"));
    }
    if n_samples < MIN_MGF_SAMPLES {
        return Err(invalid("at least 10^4 samples are required"));
    }
    if lambda_grid.iter().any(|l| !l.is_finite()) {
        return Err(invalid("lambda grid must be finite"));
    }
    let k = lambda_grid.len();
    let mut sum = alloc::vec![0.0; k];
    let mut sum_sq = alloc::vec![0.0; k];
    for _ in 0..n_samples {
        let x = sampler(rng);
        for (i, &l) in lambda_grid.iter().enumerate() {
            let e = libm::exp(l * x);
            sum[i] += e;
            sum_sq[i] += e * e;
        }
    }
    let n = n_samples as f64;
    let checks = lambda_grid
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let empirical = sum[i] / n;
            let var = (sum_sq[i] / n - empirical * empirical).max(0.0) * n / (n - 1.0);
            let std_error = libm::sqrt(var / n);
            let bound = mgf_bound(mean, claimed_nu, lambda);
            MgfCheck {
                lambda,
                empirical,
                std_error,
                bound,
                converged: empirical.is_finite() && std_error <= MGF_SE_LIMIT * empirical,
                pass: !(empirical - 3.0 * std_error > bound),
            }
        })
        .collect();
    Ok(MgfReport {
        claimed_nu,
        mean,
        samples: n_samples,
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TailDirection {
    Upper,
    Lower,
    TwoSided,
}

/// Parameters of a multiplicative tail bound on `⟨z, θ̂⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailBoundSpec {
    pub direction: TailDirection,
    pub delta: f64,
    /// Bound on the leverages `zᵀV⁻¹x_j`.
    pub gamma: f64,
    pub nu: f64,
    /// `⟨z, θ*⟩`
    pub mean: f64,
}

impl TailBoundSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(invalid("delta must lie in [0, 1]"));
        }
        if !(self.gamma > 0.0) || !(self.nu > 0.0) {
            return Err(invalid("gamma and nu must be positive"));
        }
        if !(self.mean >= 0.0) {
            return Err(invalid("target mean must be nonnegative"));
        }
        Ok(())
    }
}

/// Upper: `exp(−δ²m/(3νγ))`; lower: `exp(−δ²m/(2νγ))`; two-sided: twice the
/// upper value.
pub fn ols_tail_bound(spec: &TailBoundSpec) -> f64 {
    let base = spec.delta * spec.delta * spec.mean / (spec.nu * spec.gamma);
    match spec.direction {
        TailDirection::Upper => libm::exp(-base / 3.0),
        TailDirection::Lower => libm::exp(-base / 2.0),
        TailDirection::TwoSided => 2.0 * libm::exp(-base / 3.0),
    }
}

/// `P{⟨z,θ̂⟩ ≥ (1+δ)α} ≤ exp(−δ²α/(3γν))` for `α ≥ ⟨z,θ*⟩`.
pub fn alpha_upper_bound(delta: f64, alpha: f64, gamma: f64, nu: f64) -> f64 {
    libm::exp(-delta * delta * alpha / (3.0 * gamma * nu))
}

/// `P{⟨z,θ̂⟩ ≤ ⟨z,θ*⟩ − δα} ≤ exp(−δ²α/(2γν))` for `α ≥ ⟨z,θ*⟩`.
pub fn alpha_lower_bound(delta: f64, alpha: f64, gamma: f64, nu: f64) -> f64 {
    libm::exp(-delta * delta * alpha / (2.0 * gamma * nu))
}

/// `P{S ≤ (1−ε)μ} ≤ exp(−με²/2)` for a sum of independent Bernoullis.
pub fn chernoff_lower_bound(mu: f64, eps: f64) -> f64 {
    libm::exp(-mu * eps * eps / 2.0)
}

/// `⟨z, θ̂⟩` as a fixed linear functional of the rewards: pulls are grouped by
/// arm so each trial draws one aggregate reward per distinct arm.
#[derive(Debug, Clone)]
pub struct ProjectedEstimator {
    /// (weight `zᵀV⁻¹x`, mean `⟨x,θ*⟩`, pull count) per distinct arm
    groups: Vec<(f64, f64, u64)>,
    leverage: f64,
    leverage_index: usize,
    target: f64,
}

impl ProjectedEstimator {
    pub fn new(pulls: &ArmSet, theta_star: &[f64], z: &[f64]) -> Result<Self> {
        let d = pulls.dim();
        for v in [theta_star, z] {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
        }
        let mut v = SymMatrix::zeros(d);
        for x in pulls.iter() {
            v.add_outer(x, 1.0);
        }
        let u = match v.cholesky() {
            Some(c) => c.solve(z),
            None => {
                let eig = v.eigen();
                let cutoff = 1e-10 * eig.max().max(0.0);
                let rank = eig.values.iter().filter(|&&e| e > cutoff).count();
                return Err(Error::RankDeficient { rank, dim: d });
            }
        };
        let mut counts: BTreeMap<Vec<u64>, (usize, u64)> = BTreeMap::new();
        for (j, x) in pulls.iter().enumerate() {
            let key: Vec<u64> = x.iter().map(|c| c.to_bits()).collect();
            counts.entry(key).or_insert((j, 0)).1 += 1;
        }
        let mut firsts: Vec<(usize, u64)> = counts.into_values().collect();
        firsts.sort_unstable();
        let mut groups = Vec::with_capacity(firsts.len());
        let (mut leverage, mut leverage_index) = (f64::NEG_INFINITY, 0);
        for (j, count) in firsts {
            let x = pulls.arm(j);
            let w = dot(&u, x);
            if w > leverage {
                leverage = w;
                leverage_index = j;
            }
            groups.push((w, dot(x, theta_star), count));
        }
        Ok(Self {
            groups,
            leverage,
            leverage_index,
            target: dot(z, theta_star),
        })
    }

    /// `max_j zᵀV⁻¹x_j`
    pub fn leverage(&self) -> f64 {
        self.leverage
    }

    /// A pull index attaining the maximum leverage.
    pub fn leverage_index(&self) -> usize {
        self.leverage_index
    }

    /// `⟨z, θ*⟩`
    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn sample<R: RngCore + ?Sized>(&self, model: RewardModel, rng: &mut R) -> f64 {
        self.groups
            .iter()
            .map(|&(w, mean, count)| w * model.sample_sum(mean, count, rng))
            .sum()
    }

    pub fn simulate<R: RngCore + ?Sized>(
        &self,
        model: RewardModel,
        trials: usize,
        rng: &mut R,
    ) -> Vec<f64> {
        (0..trials).map(|_| self.sample(model, rng)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "event", rename_all = "snake_case"))]
pub enum TailEvent {
    /// `⟨z,θ̂⟩ ≥ (1+δ)⟨z,θ*⟩`
    Upper { delta: f64 },
    /// `⟨z,θ̂⟩ ≤ (1−δ)⟨z,θ*⟩`
    Lower { delta: f64 },
    /// `|⟨z,θ̂⟩ − ⟨z,θ*⟩| ≥ δ⟨z,θ*⟩`
    TwoSided { delta: f64 },
    /// `⟨z,θ̂⟩ ≥ (1+δ)α`
    AlphaUpper { delta: f64, alpha: f64 },
    /// `⟨z,θ̂⟩ ≤ ⟨z,θ*⟩ − δα`
    AlphaLower { delta: f64, alpha: f64 },
    /// `S ≤ (1−ε)μ`
    Quota { eps: f64, mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailCheck {
    pub event: TailEvent,
    pub bound: f64,
    pub frequency: f64,
    pub slack: f64,
    pub trials: usize,
    pub pass: bool,
}

impl TailCheck {
    fn new(event: TailEvent, bound: f64, hits: usize, trials: usize) -> Self {
        let frequency = hits as f64 / trials as f64;
        let b = bound.min(1.0);
        let slack = binomial_slack(b, trials);
        Self {
            event,
            bound,
            frequency,
            slack,
            trials,
            pass: frequency <= bound + slack,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailReport {
    pub leverage: f64,
    pub target: f64,
    pub checks: Vec<TailCheck>,
}

impl TailReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Frequencies of the deviation event(s) of `spec` in `samples` of `⟨z,θ̂⟩`,
/// plus the α-threshold events when `alpha` is given.
pub fn evaluate_tail(samples: &[f64], spec: &TailBoundSpec, alpha: Option<f64>) -> Result<Vec<TailCheck>> {
    spec.validate()?;
    let trials = samples.len();
    if trials == 0 {
        return Err(invalid("no samples"));
    }
    let (m, delta) = (spec.mean, spec.delta);
    let count = |pred: &dyn Fn(f64) -> bool| samples.iter().filter(|&&s| pred(s)).count();
    let mut out = Vec::new();
    let bound = ols_tail_bound(spec);
    let event = match spec.direction {
        TailDirection::Upper => TailEvent::Upper { delta },
        TailDirection::Lower => TailEvent::Lower { delta },
        TailDirection::TwoSided => TailEvent::TwoSided { delta },
    };
    let hits = match spec.direction {
        TailDirection::Upper => count(&|s| s >= (1.0 + delta) * m),
        TailDirection::Lower => count(&|s| s <= (1.0 - delta) * m),
        TailDirection::TwoSided => count(&|s| (s - m).abs() >= delta * m),
    };
    out.push(TailCheck::new(event, bound, hits, trials));
    if let Some(alpha) = alpha {
        if !(alpha >= m) {
            return Err(invalid("alpha must be at least the target mean"));
        }
        let up = count(&|s| s >= (1.0 + delta) * alpha);
        out.push(TailCheck::new(
            TailEvent::AlphaUpper { delta, alpha },
            alpha_upper_bound(delta, alpha, spec.gamma, spec.nu),
            up,
            trials,
        ));
        let lo = count(&|s| s <= m - delta * alpha);
        out.push(TailCheck::new(
            TailEvent::AlphaLower { delta, alpha },
            alpha_lower_bound(delta, alpha, spec.gamma, spec.nu),
            lo,
            trials,
        ));
    }
    Ok(out)
}

/// Simulates the OLS estimate `⟨z, θ̂⟩` from the fixed pull multiset `pulls`
/// `trials` times and checks the tail bound(s) of `spec`.
///
/// The leverage hypothesis `zᵀV⁻¹x_j ≤ γ` is verified up front.
#[allow(clippy::too_many_arguments)]
pub fn mc_tail_check<R: RngCore + ?Sized>(
    pulls: &ArmSet,
    theta_star: &[f64],
    z: &[f64],
    model: RewardModel,
    spec: &TailBoundSpec,
    alpha: Option<f64>,
    trials: usize,
    rng: &mut R,
) -> Result<TailReport> {
    spec.validate()?;
    if trials < MIN_TAIL_TRIALS {
        return Err(invalid("at least 10^3 trials are required"));
    }
    let est = ProjectedEstimator::new(pulls, theta_star, z)?;
    if est.leverage() > spec.gamma * (1.0 + 1e-12) {
        return Err(Error::LeverageViolated {
            index: est.leverage_index(),
            leverage: est.leverage(),
            gamma: spec.gamma,
        });
    }
    if (est.target() - spec.mean).abs() > 1e-9 * est.target().abs().max(1.0) {
        return Err(invalid("spec mean differs from ⟨z, θ*⟩"));
    }
    let samples = est.simulate(model, trials, rng);
    Ok(TailReport {
        leverage: est.leverage(),
        target: est.target(),
        checks: evaluate_tail(&samples, spec, alpha)?,
    })
}

/// Flips `flips` fair coins `trials` times and checks the frequency of
/// `heads ≤ (1−ε)·flips/2` against the Chernoff bound.
pub fn mc_quota_check<R: RngCore + ?Sized>(
    flips: usize,
    eps: f64,
    trials: usize,
    rng: &mut R,
) -> Result<TailCheck> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid("eps must lie in [0, 1]"));
    }
    if trials == 0 {
        return Err(invalid("no trials"));
    }
    let mu = flips as f64 / 2.0;
    let threshold = (1.0 - eps) * mu;
    let mut hits = 0;
    for _ in 0..trials {
        let mut heads = 0u32;
        let mut left = flips;
        while left > 0 {
            let take = left.min(64);
            let bits = rng.next_u64();
            let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            heads += (bits & mask).count_ones();
            left -= take;
        }
        if heads as f64 <= threshold {
            hits += 1;
        }
    }
    Ok(TailCheck::new(
        TailEvent::Quota { eps, mu },
        chernoff_lower_bound(mu, eps),
        hits,
        trials,
    ))
}
