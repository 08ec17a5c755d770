use std::time::Instant;

use anyhow::Result;
use linnash_core::concentration::{
    check_sub_poisson, evaluate_tail, mc_quota_check, ProjectedEstimator, TailBoundSpec, TailCheck,
    TailDirection,
};
use linnash_core::design::{g_value, solve_d_optimal, DEFAULT_MAX_ITER};
use linnash_core::env::{generate_instance, ArmSource, Lineage, Purpose, RewardModel};
use linnash_core::geometry::{center_distribution, mvee};
use linnash_core::linalg::{dot, norm, SymMatrix};
use linnash_core::linnash::{generate_arm_sequence, PullSource};
use linnash_core::ArmSet;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Concentration,
    Design,
    Geometry,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: String,
    pub bound: Option<f64>,
    pub empirical: Option<f64>,
    pub slack: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Monte-Carlo trials per tail check.
    pub trials: usize,
    pub mgf_samples: usize,
    pub design_instances: usize,
    pub geometry_instances: usize,
    /// Adds a Poisson(1) check that claims ν = 0.1, which must fail.
    pub corrupt_nu: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 100_000,
            mgf_samples: 200_000,
            design_instances: 50,
            geometry_instances: 100,
            corrupt_nu: false,
        }
    }
}

pub fn run_validation(suite: Suite, opts: &ValidateOptions) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    if suite.includes(Suite::Design) {
        checks.extend(design_checks(opts)?);
    }
    if suite.includes(Suite::Geometry) {
        checks.extend(geometry_checks(opts)?);
    }
    if suite.includes(Suite::Concentration) {
        checks.extend(concentration_checks(opts)?);
    }
    Ok(ValidationReport {
        seed: opts.seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

fn gaussian_arms(d: usize, n: usize, rng: &mut impl Rng) -> ArmSet {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    ArmSet::new(d, &rows).expect("well-formed rows")
}

/// Dimension and arm count of the `i`-th seeded design instance:
/// `d ∈ {2,…,10}`, `|X| ∈ {20,…,200}`.
pub fn design_instance_shape(i: usize) -> (usize, usize) {
    (2 + i % 9, 20 + (i * 37) % 181)
}

/// Kiefer-Wolfowitz certificate `g(λ) ≤ 1.05·d` with the support cap, on
/// seeded Gaussian arm sets.
pub fn design_checks(opts: &ValidateOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for i in 0..opts.design_instances {
        let (d, n) = design_instance_shape(i);
        let mut rng = Lineage::new(opts.seed, i as u64).stream(Purpose::Validation);
        let arms = gaussian_arms(d, n, &mut rng);
        let start = Instant::now();
        let sol = solve_d_optimal(&arms, 0.05, DEFAULT_MAX_ITER);
        let secs = start.elapsed().as_secs_f64();
        let (pass, g, detail) = match sol {
            Ok(sol) => {
                let g = g_value(&arms, &sol.weights)?;
                let cap = d * (d + 1) / 2;
                let support = sol.weights.support().len();
                (
                    g <= 1.05 * d as f64 && g >= d as f64 * (1.0 - 1e-9) && support <= cap && secs < 5.0,
                    Some(g),
                    format!("d={d} |X|={n} support={support} cap={cap} {secs:.3}s"),
                )
            }
            Err(e) => (false, None, format!("d={d} |X|={n}: {e}")),
        };
        out.push(CheckResult {
            suite: "design",
            name: format!("kw_certificate[{i}]"),
            bound: Some(1.05 * d as f64),
            empirical: g,
            slack: None,
            pass,
            detail,
        });
    }
    Ok(out)
}

/// Shape of the `i`-th geometry instance: `d ∈ {2,…,6}`, 50 arms.
pub fn geometry_instance_shape(i: usize) -> (usize, usize) {
    (2 + i % 5, 50)
}

pub fn geometry_checks(opts: &ValidateOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for i in 0..opts.geometry_instances {
        let (d, n) = geometry_instance_shape(i);
        let mut rng = Lineage::new(opts.seed, i as u64).stream(Purpose::Instance);
        let inst = generate_instance(
            d,
            ArmSource::Gaussian { n_arms: n },
            0.5,
            RewardModel::Bernoulli,
            &mut rng,
        )?;
        out.push(center_reward_check(i, inst.arms(), inst.theta_star(), inst.optimum())?);
    }
    for i in 0..opts.geometry_instances.min(50) {
        let d = 2 + i % 5;
        let mut rng = Lineage::new(opts.seed, 1000 + i as u64).stream(Purpose::Validation);
        let pts = gaussian_arms(d, 10 + 4 * i, &mut rng);
        let m = mvee(&pts, 1e-6, 1_000_000)?;
        let worst = pts
            .iter()
            .map(|x| m.ellipsoid.shape_norm_sq(x))
            .fold(0.0, f64::max);
        out.push(CheckResult {
            suite: "geometry",
            name: format!("mvee_containment[{i}]"),
            bound: Some(1.0 + 1e-6),
            empirical: Some(worst),
            slack: None,
            pass: worst <= 1.0 + 1e-6,
            detail: format!("d={d} points={}", pts.len()),
        });
    }
    let tri = ArmSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])?;
    let m = mvee(&tri, 1e-9, 1_000_000)?;
    let err = m
        .ellipsoid
        .center
        .iter()
        .map(|c| (c - 1.0 / 3.0).abs())
        .fold(0.0, f64::max);
    out.push(CheckResult {
        suite: "geometry",
        name: "triangle_center".into(),
        bound: Some(1e-6),
        empirical: Some(err),
        slack: None,
        pass: err <= 1e-6,
        detail: format!("center={:?}", m.ellipsoid.center),
    });
    Ok(out)
}

/// `E_{x∼U}⟨x,θ*⟩ ≥ ⟨x*,θ*⟩/(d+1)`, allowing only the `1e-8` barycenter
/// slack (times `‖θ*‖`).
pub fn center_reward_check(i: usize, arms: &ArmSet, theta: &[f64], optimum: f64) -> Result<CheckResult> {
    let d = arms.dim();
    let dist = center_distribution(arms, 1e-6)?;
    let expected = dist.expected_inner(arms, theta);
    let bound = optimum / (d as f64 + 1.0);
    let slack = 1e-8 * norm(theta) * arms.max_norm().max(1.0);
    Ok(CheckResult {
        suite: "geometry",
        name: format!("center_reward[{i}]"),
        bound: Some(bound),
        empirical: Some(expected),
        slack: Some(slack),
        pass: expected + slack >= bound && dist.len() <= d + 1,
        detail: format!("d={d} |X|={} atoms={}", arms.len(), dist.len()),
    })
}

pub const MGF_GRID: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

fn mgf_check(
    name: &str,
    model: RewardModel,
    mean: f64,
    nu: f64,
    opts: &ValidateOptions,
    stream: u16,
) -> Result<CheckResult> {
    let mut rng = Lineage::new(opts.seed, 0).stream(Purpose::Other(stream));
    let report = check_sub_poisson(
        |r: &mut _| model.sample(mean, r),
        nu,
        mean,
        &MGF_GRID,
        opts.mgf_samples,
        &mut rng,
    )?;
    let worst = report
        .checks
        .iter()
        .max_by(|a, b| {
            ((a.empirical - a.bound) / a.bound).total_cmp(&((b.empirical - b.bound) / b.bound))
        })
        .expect("nonempty grid");
    let unconverged: Vec<f64> = report
        .checks
        .iter()
        .filter(|c| !c.converged)
        .map(|c| c.lambda)
        .collect();
    Ok(CheckResult {
        suite: "concentration",
        name: name.into(),
        bound: Some(worst.bound),
        empirical: Some(worst.empirical),
        slack: Some(3.0 * worst.std_error),
        pass: report.pass(),
        detail: format!(
            "worst λ={} violations={:?} unconverged λ={unconverged:?}",
            worst.lambda,
            report.violations().map(|c| c.lambda).collect::<Vec<_>>()
        ),
    })
}

fn tail_result(name: String, c: &TailCheck) -> CheckResult {
    CheckResult {
        suite: "concentration",
        name,
        bound: Some(c.bound),
        empirical: Some(c.frequency),
        slack: Some(c.slack),
        pass: c.pass,
        detail: format!("{:?} trials={}", c.event, c.trials),
    }
}

/// A pull multiset for the OLS tail checks.
pub struct TailSetup {
    pub name: &'static str,
    pub pulls: ArmSet,
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    pub model: RewardModel,
}

pub fn tail_setups() -> Vec<TailSetup> {
    let repeat = |rows: &[Vec<f64>], k: usize| -> ArmSet {
        let all: Vec<Vec<f64>> = rows.iter().flat_map(|r| std::iter::repeat_n(r.clone(), k)).collect();
        ArmSet::from_rows(&all).expect("well-formed rows")
    };
    vec![
        TailSetup {
            name: "poisson_axes",
            pulls: repeat(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], 200),
            theta: vec![1.0, 1.0, 1.0],
            z: vec![1.0, 0.0, 0.0],
            model: RewardModel::Poisson,
        },
        TailSetup {
            name: "bernoulli_mixed",
            pulls: repeat(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]], 100),
            theta: vec![0.3, 0.4],
            z: vec![0.5, 0.5],
            model: RewardModel::Bernoulli,
        },
    ]
}

/// Upper/lower tails at δ ∈ {0.1, 0.3, 0.5}, the two-sided form, and the
/// α-threshold forms with `α = 1.5·⟨z,θ*⟩`, all from one simulation per
/// setup. `γ` is the exact maximum leverage of the pull set.
pub fn tail_checks(setup: &TailSetup, trials: usize, seed: u64, stream: u16) -> Result<Vec<CheckResult>> {
    let est = ProjectedEstimator::new(&setup.pulls, &setup.theta, &setup.z)?;
    let mut rng = Lineage::new(seed, 0).stream(Purpose::Other(stream));
    let samples = est.simulate(setup.model, trials, &mut rng);
    let mut out = Vec::new();
    for delta in [0.1, 0.3, 0.5] {
        for direction in [TailDirection::Upper, TailDirection::Lower, TailDirection::TwoSided] {
            let spec = TailBoundSpec {
                direction,
                delta,
                gamma: est.leverage(),
                nu: setup.model.nu(),
                mean: est.target(),
            };
            let alpha = (direction == TailDirection::Upper).then(|| 1.5 * est.target());
            for c in evaluate_tail(&samples, &spec, alpha)? {
                out.push(tail_result(format!("{}:{:?}", setup.name, c.event), &c));
            }
        }
    }
    Ok(out)
}

/// Over `runs` warm-up sequences of length `t_tilde`: the fraction with at
/// least `T̃/3` design pulls, and, whenever every design atom met its quota,
/// the cross-leverage bound `xᵀV⁻¹X_t ≤ 3·g(λ)/T̃`.
pub fn warmup_checks(seed: u64, runs: usize, t_tilde: usize) -> Result<Vec<CheckResult>> {
    let mut rng = Lineage::new(seed, 0).stream(Purpose::Instance);
    let inst = generate_instance(5, ArmSource::Gaussian { n_arms: 50 }, 0.5, RewardModel::Bernoulli, &mut rng)?;
    let arms = inst.arms();
    let design = solve_d_optimal(arms, 0.05, DEFAULT_MAX_ITER)?.weights;
    let g = g_value(arms, &design)?;
    let center = center_distribution(arms, 1e-3)?;
    let quota_total: usize = design
        .support()
        .iter()
        .map(|&z| (design.weight(z) * t_tilde as f64 / 3.0).ceil() as usize)
        .sum();
    let mut enough = 0;
    let mut quota_met = 0;
    let mut worst_ratio: f64 = 0.0;
    for r in 0..runs {
        let mut src = Lineage::new(seed, r as u64).stream(Purpose::Algorithm);
        let seq = generate_arm_sequence(t_tilde, &design, &center, &mut src);
        let opt = seq.iter().filter(|e| e.source == PullSource::Design).count();
        if 3 * opt >= t_tilde {
            enough += 1;
        }
        if opt < quota_total {
            continue;
        }
        quota_met += 1;
        let mut v = SymMatrix::zeros(arms.dim());
        let mut pulled = vec![false; arms.len()];
        for e in &seq {
            v.add_outer(arms.arm(e.arm), 1.0);
            pulled[e.arm] = true;
        }
        let inv = v.inverse().expect("design pulls span the arms");
        for (j, _) in pulled.iter().enumerate().filter(|(_, p)| **p) {
            let w = inv.mul_vec(arms.arm(j));
            for x in arms.iter() {
                worst_ratio = worst_ratio.max(dot(x, &w));
            }
        }
    }
    let bound = 3.0 * g / t_tilde as f64;
    let freq = enough as f64 / runs as f64;
    Ok(vec![
        CheckResult {
            suite: "concentration",
            name: "warmup_design_pulls".into(),
            bound: Some(0.997),
            empirical: Some(freq),
            slack: None,
            pass: freq >= 0.997,
            detail: format!("runs={runs} T̃={t_tilde}; fraction with ≥ T̃/3 design pulls"),
        },
        CheckResult {
            suite: "concentration",
            name: "warmup_leverage".into(),
            bound: Some(bound + 1e-9),
            empirical: Some(worst_ratio),
            slack: None,
            pass: quota_met > 0 && worst_ratio <= bound + 1e-9,
            detail: format!(
                "g={g:.4} (3d/T̃={:.5}); runs with all quotas met: {quota_met}",
                3.0 * arms.dim() as f64 / t_tilde as f64
            ),
        },
    ])
}

pub fn concentration_checks(opts: &ValidateOptions) -> Result<Vec<CheckResult>> {
    let mut out = vec![
        mgf_check("mgf_bernoulli_0.3", RewardModel::Bernoulli, 0.3, 1.0, opts, 1)?,
        mgf_check(
            "mgf_scaled_bernoulli_2_0.6",
            RewardModel::ScaledBernoulli { bound: 2.0 },
            0.6,
            2.0,
            opts,
            2,
        )?,
        mgf_check("mgf_poisson_1", RewardModel::Poisson, 1.0, 1.0, opts, 3)?,
    ];
    if opts.corrupt_nu {
        out.push(mgf_check("mgf_poisson_1_nu_0.1", RewardModel::Poisson, 1.0, 0.1, opts, 4)?);
    }
    for (k, setup) in tail_setups().iter().enumerate() {
        out.extend(tail_checks(setup, opts.trials, opts.seed, 10 + k as u16)?);
    }
    let mut rng = Lineage::new(opts.seed, 0).stream(Purpose::Other(20));
    let quota = mc_quota_check(300, 1.0 / 3.0, opts.trials, &mut rng)?;
    out.push(tail_result("chernoff_quota".into(), &quota));
    out.extend(warmup_checks(opts.seed, 1000, 300)?);
    Ok(out)
}
