//! LinNash: phased elimination with Nash confidence bounds.
//!
//! A run has two parts. The warm-up part pulls a sequence that mixes draws
//! from the ellipsoid-center distribution (which keeps every round's expected
//! reward at least `⟨x*,θ*⟩/(2(d+1))`) with round-robin pulls of a D-optimal
//! design. The second part runs doubling phases: each phase solves the design
//! on the surviving arms, pulls every support atom `⌈λ_a·T′⌉` times, fits OLS
//! on that phase's data alone and eliminates arms.

use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::arms::{argmax, ArmSet};
use crate::design::{self, solve_d_optimal_in_span, DesignWeights};
use crate::env::{BanditInstance, Lineage, Purpose};
use crate::error::{invalid, Error, Result};
use crate::geometry::{self, center_distribution, CenterDistribution};
use crate::linalg::{solve_psd, SymMatrix};
use crate::metrics::{RoundRecord, RunHeader, RunLog};

/// Which elimination rule and warm-up length to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    /// Widths scale with `ln(T·|X|)`.
    Finite,
    /// Widths scale with `d^{5/2}·ln T` and never reference `|X|`.
    Infinite,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Finite => "linnash",
            Variant::Infinite => "linnash-infinite",
        }
    }
}

/// Warm-up length `T̃`: `3√(T·d·ν·ln(T|X|))` (finite) or
/// `3√(T·d^{2.5}·ν·ln T)` (infinite), rounded up and clamped to `[d+1, T]`.
pub fn horizon_split(horizon: usize, d: usize, nu: f64, n_arms: usize, variant: Variant) -> usize {
    let t = horizon as f64;
    let raw = match variant {
        Variant::Finite => 3.0 * libm::sqrt(t * d as f64 * nu * libm::log(t * n_arms as f64)),
        Variant::Infinite => 3.0 * libm::sqrt(t * libm::pow(d as f64, 2.5) * nu * libm::log(t)),
    };
    let raw = if raw.is_finite() { libm::ceil(raw.max(0.0)) } else { f64::INFINITY };
    let clamped = if raw >= horizon as f64 { horizon } else { raw as usize };
    clamped.max(d + 1).min(horizon)
}

/// Randomness consumed by [`generate_arm_sequence`].
pub trait SequenceSource {
    /// `true` selects SAMPLE-U, `false` selects D/G-OPT; fair.
    fn flip(&mut self) -> bool;
    /// Uniform in `[0, 1)`.
    fn uniform(&mut self) -> f64;
}

impl<R: RngCore + ?Sized> SequenceSource for R {
    fn flip(&mut self) -> bool {
        self.random::<bool>()
    }

    fn uniform(&mut self) -> f64 {
        self.random::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PullSource {
    SampleU,
    Design,
    Phase(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleEntry {
    /// 1-based round.
    pub round: usize,
    pub arm: usize,
    pub source: PullSource,
}

/// Builds the warm-up sequence of length `t_tilde`.
///
/// Each step flips a fair coin. SAMPLE-U (or an exhausted design pool) draws
/// from `center`; otherwise the next design atom in round-robin order is
/// taken, and an atom leaves the pool once it has been taken
/// `⌈λ_z·T̃/3⌉` times.
pub fn generate_arm_sequence<S: SequenceSource + ?Sized>(
    t_tilde: usize,
    design: &DesignWeights,
    center: &CenterDistribution,
    src: &mut S,
) -> Vec<ScheduleEntry> {
    let mut pool: Vec<(usize, usize)> = design
        .support()
        .iter()
        .map(|&z| {
            let quota = libm::ceil(design.weight(z) * t_tilde as f64 / 3.0) as usize;
            (z, quota.max(1))
        })
        .collect();
    let mut cursor = 0;
    let mut out = Vec::with_capacity(t_tilde);
    for round in 1..=t_tilde {
        let sample_u = src.flip();
        if sample_u || pool.is_empty() {
            out.push(ScheduleEntry {
                round,
                arm: center.sample_with(src.uniform()),
                source: PullSource::SampleU,
            });
            continue;
        }
        let (z, left) = &mut pool[cursor];
        out.push(ScheduleEntry {
            round,
            arm: *z,
            source: PullSource::Design,
        });
        *left -= 1;
        if *left == 0 {
            pool.remove(cursor);
        } else {
            cursor += 1;
        }
        if cursor >= pool.len() {
            cursor = 0;
        }
    }
    out
}

/// Least-squares accumulator `V = Σ x xᵀ`, `s = Σ r x`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsState {
    pub v: SymMatrix,
    pub s: Vec<f64>,
    pub pulls: usize,
}

impl OlsState {
    pub fn new(dim: usize) -> Self {
        Self {
            v: SymMatrix::zeros(dim),
            s: alloc::vec![0.0; dim],
            pulls: 0,
        }
    }

    pub fn update(&mut self, x: &[f64], reward: f64) {
        self.v.add_outer(x, 1.0);
        for (s, xi) in self.s.iter_mut().zip(x) {
            *s += reward * xi;
        }
        self.pulls += 1;
    }

    /// `θ̂` solving `Vθ = s`; falls back to the pseudo-inverse when `V` is
    /// singular.
    pub fn estimate(&self) -> Vec<f64> {
        solve_psd(&self.v, &self.s)
    }
}

/// `6·√(max(est,0)·ν·d·log_term/t)`
pub fn nash_width(est: f64, nu: f64, d: usize, log_term: f64, t: f64) -> f64 {
    6.0 * libm::sqrt(est.max(0.0) * nu * d as f64 * log_term / t)
}

/// `(LNCB, UNCB)` of an estimate.
pub fn nash_bounds(est: f64, nu: f64, d: usize, log_term: f64, t: f64) -> (f64, f64) {
    let w = nash_width(est, nu, d, log_term, t);
    (est - w, est + w)
}

/// Keeps `x ∈ surviving` iff `est_x + w_x ≥ max_{z ∈ surviving}(est_z − w_z)`.
/// If nothing would survive, the arm with the largest estimate is kept.
pub fn eliminate_with_widths(surviving: &[usize], estimates: &[f64], widths: &[f64]) -> Vec<usize> {
    let best_lower = surviving
        .iter()
        .map(|&z| estimates[z] - widths[z])
        .fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = surviving
        .iter()
        .copied()
        .filter(|&x| estimates[x] + widths[x] >= best_lower)
        .collect();
    if kept.is_empty() {
        alloc::vec![best_of(surviving, estimates)]
    } else {
        kept
    }
}

fn best_of(surviving: &[usize], estimates: &[f64]) -> usize {
    let sub: Vec<f64> = surviving.iter().map(|&i| estimates[i]).collect();
    surviving[argmax(&sub)]
}

/// Confidence-bound elimination with `t` effective rounds.
pub fn eliminate_finite(
    surviving: &[usize],
    estimates: &[f64],
    nu: f64,
    d: usize,
    log_term: f64,
    t: f64,
    width_scale: f64,
) -> Vec<usize> {
    let mut widths = alloc::vec![0.0; estimates.len()];
    for &x in surviving {
        widths[x] = width_scale * nash_width(estimates[x], nu, d, log_term, t);
    }
    eliminate_with_widths(surviving, estimates, &widths)
}

/// Keeps `x` iff `est_x ≥ γ − width`, where `γ` is the best surviving
/// estimate and `width = c·√(max(γ,0)·d^{5/2}·ν·ln T·factor/t)` with
/// `c = 16·width_scale`. `factor` is 3 right after the warm-up and 1 in later
/// phases.
#[allow(clippy::too_many_arguments)]
pub fn eliminate_infinite(
    surviving: &[usize],
    estimates: &[f64],
    nu: f64,
    d: usize,
    ln_horizon: f64,
    t: f64,
    factor: f64,
    width_scale: f64,
) -> Vec<usize> {
    let best = best_of(surviving, estimates);
    let gamma = estimates[best];
    let width = width_scale
        * 16.0
        * libm::sqrt(gamma.max(0.0) * libm::pow(d as f64, 2.5) * nu * ln_horizon * factor / t);
    let kept: Vec<usize> = surviving
        .iter()
        .copied()
        .filter(|&x| estimates[x] >= gamma - width)
        .collect();
    if kept.is_empty() {
        alloc::vec![best]
    } else {
        kept
    }
}

/// Tunables; the defaults are the constants of the analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LinNashParams {
    /// Multiplies every confidence width.
    pub width_scale: f64,
    /// Multiplies the warm-up length before clamping.
    pub warmup_scale: f64,
    pub design_tol: f64,
    pub design_max_iter: usize,
    pub geometry_eps: f64,
}

impl Default for LinNashParams {
    fn default() -> Self {
        Self {
            width_scale: 1.0,
            warmup_scale: 1.0,
            design_tol: design::DEFAULT_TOL,
            design_max_iter: design::DEFAULT_MAX_ITER,
            geometry_eps: geometry::RUN_EPS,
        }
    }
}

impl LinNashParams {
    fn validate(&self) -> Result<()> {
        if !(self.width_scale >= 0.0 && self.width_scale.is_finite()) {
            return Err(invalid("width_scale must be nonnegative"));
        }
        if !(self.warmup_scale > 0.0 && self.warmup_scale.is_finite()) {
            return Err(invalid("warmup_scale must be positive"));
        }
        Ok(())
    }
}

/// Instance-level warm-up ingredients, identical for every replica.
#[derive(Debug, Clone)]
pub struct WarmupPlan {
    pub design: DesignWeights,
    pub center: CenterDistribution,
}

impl WarmupPlan {
    pub fn new(arms: &ArmSet, params: &LinNashParams) -> Result<Self> {
        let design = solve_d_optimal_in_span(arms, params.design_tol, params.design_max_iter)?;
        let center = center_distribution(arms, params.geometry_eps)?;
        Ok(Self {
            design: design.weights,
            center,
        })
    }
}

/// Bookkeeping for one elimination phase (phase 0 is the warm-up).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseRecord {
    pub phase: u32,
    /// Phase-length parameter `T′` (`T̃/3` for the warm-up).
    pub t_prime: f64,
    pub rounds: usize,
    pub support: usize,
    pub surviving_before: usize,
    pub surviving_after: usize,
    /// False when the horizon cut the phase below `d` pulls and no
    /// elimination took place.
    pub estimated: bool,
}

#[derive(Debug, Clone)]
pub struct LinNashRun {
    pub log: RunLog,
    pub phases: Vec<PhaseRecord>,
    pub warmup_rounds: usize,
    pub surviving: Vec<usize>,
}

pub fn run_linnash_finite(
    instance: &BanditInstance,
    horizon: usize,
    lineage: Lineage,
) -> Result<LinNashRun> {
    run_linnash(instance, horizon, Variant::Finite, &LinNashParams::default(), lineage)
}

pub fn run_linnash_infinite(
    instance: &BanditInstance,
    horizon: usize,
    lineage: Lineage,
) -> Result<LinNashRun> {
    run_linnash(instance, horizon, Variant::Infinite, &LinNashParams::default(), lineage)
}

pub fn run_linnash(
    instance: &BanditInstance,
    horizon: usize,
    variant: Variant,
    params: &LinNashParams,
    lineage: Lineage,
) -> Result<LinNashRun> {
    params.validate()?;
    let plan = WarmupPlan::new(instance.arms(), params)?;
    run_linnash_with_plan(instance, horizon, variant, params, &plan, lineage)
}

/// Like [`run_linnash`] with a precomputed warm-up plan.
pub fn run_linnash_with_plan(
    instance: &BanditInstance,
    horizon: usize,
    variant: Variant,
    params: &LinNashParams,
    plan: &WarmupPlan,
    lineage: Lineage,
) -> Result<LinNashRun> {
    params.validate()?;
    let arms = instance.arms();
    let d = arms.dim();
    let n = arms.len();
    let nu = instance.nu();
    if horizon < d + 1 {
        return Err(Error::InfeasibleHorizon {
            horizon,
            min: d + 1,
        });
    }
    if plan.design.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: plan.design.len(),
        });
    }
    let mut alg_rng = lineage.stream(Purpose::Algorithm);
    let mut reward_rng = lineage.stream(Purpose::Rewards);

    let t_tilde = {
        let base = horizon_split(horizon, d, nu, n, variant) as f64;
        let scaled = libm::ceil(base * params.warmup_scale) as usize;
        scaled.max(d + 1).min(horizon)
    };
    let ln_horizon = libm::log(horizon as f64);
    let log_term = libm::log(horizon as f64 * n as f64);

    let mut log = RunLog::with_capacity(RunHeader::new(variant.tag(), instance, lineage), horizon);
    let mut pull = |arm: usize, phase: u32, ols: &mut OlsState, log: &mut RunLog| {
        let mean = instance.mean(arm);
        let reward = instance.model().sample(mean, &mut reward_rng);
        ols.update(arms.arm(arm), reward);
        log.push(RoundRecord {
            arm,
            true_mean: mean,
            reward,
            phase,
        });
    };

    let everyone: Vec<usize> = (0..n).collect();
    let eliminate = |surviving: &[usize], estimates: &[f64], t: f64, warmup: bool| match variant {
        Variant::Finite => {
            eliminate_finite(surviving, estimates, nu, d, log_term, t, params.width_scale)
        }
        Variant::Infinite => eliminate_infinite(
            surviving,
            estimates,
            nu,
            d,
            ln_horizon,
            t,
            if warmup { 3.0 } else { 1.0 },
            params.width_scale,
        ),
    };

    let mut ols = OlsState::new(d);
    for entry in generate_arm_sequence(t_tilde, &plan.design, &plan.center, &mut alg_rng) {
        pull(entry.arm, 0, &mut ols, &mut log);
    }
    let estimates = arms.inner_products(&ols.estimate());
    let warmup_t = match variant {
        Variant::Finite => t_tilde as f64 / 3.0,
        Variant::Infinite => t_tilde as f64,
    };
    let mut surviving = eliminate(&everyone, &estimates, warmup_t, true);
    let mut phases = alloc::vec![PhaseRecord {
        phase: 0,
        t_prime: t_tilde as f64 / 3.0,
        rounds: t_tilde,
        support: plan.design.support().len(),
        surviving_before: n,
        surviving_after: surviving.len(),
        estimated: true,
    }];

    let mut t_prime = 2.0 * t_tilde as f64 / 3.0;
    let mut phase = 1u32;
    while log.len() < horizon {
        let sub = arms.subset(&surviving);
        let design = solve_d_optimal_in_span(&sub, params.design_tol, params.design_max_iter)?;
        let mut ols = OlsState::new(d);
        let start = log.len();
        for &k in design.weights.support() {
            let count = libm::ceil(design.weights.weight(k) * t_prime) as usize;
            let count = count.min(horizon - log.len());
            for _ in 0..count {
                pull(surviving[k], phase, &mut ols, &mut log);
            }
            if log.len() == horizon {
                break;
            }
        }
        let before = surviving.len();
        let estimated = ols.pulls >= d;
        if estimated {
            let estimates = arms.inner_products(&ols.estimate());
            surviving = eliminate(&surviving, &estimates, t_prime, false);
        }
        phases.push(PhaseRecord {
            phase,
            t_prime,
            rounds: log.len() - start,
            support: design.weights.support().len(),
            surviving_before: before,
            surviving_after: surviving.len(),
            estimated,
        });
        t_prime *= 2.0;
        phase += 1;
    }

    Ok(LinNashRun {
        log,
        phases,
        warmup_rounds: t_tilde,
        surviving,
    })
}
