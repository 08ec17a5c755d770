use linnash_core::concentration::{
    alpha_lower_bound, alpha_upper_bound, check_sub_poisson, chernoff_lower_bound, mc_quota_check,
    mc_tail_check, mgf_bound, ols_tail_bound, sub_gaussian_nu, ProjectedEstimator, TailBoundSpec,
    TailDirection, TailEvent,
};
use linnash_core::env::{Lineage, Purpose, RewardModel, RngStream};
use linnash_core::{ArmSet, Error};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

const GRID: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

fn rng(tag: u16) -> RngStream {
    Lineage::new(11, 0).stream(Purpose::Other(tag))
}

#[test]
fn bernoulli_example_values() {
    let exact = 0.7 + 0.3 * std::f64::consts::E;
    assert!((exact - 1.5155).abs() < 1e-4);
    assert!((mgf_bound(0.3, 1.0, 1.0) - 1.6745).abs() < 1e-4);
    let report = check_sub_poisson(
        |r: &mut RngStream| RewardModel::Bernoulli.sample(0.3, r),
        1.0,
        0.3,
        &GRID,
        100_000,
        &mut rng(1),
    )
    .unwrap();
    assert!(report.pass());
    let at_one = report.checks.iter().find(|c| c.lambda == 1.0).unwrap();
    assert!((at_one.empirical - exact).abs() < 0.01);
}

#[test]
fn poisson_is_the_equality_case() {
    let report = check_sub_poisson(
        |r: &mut RngStream| RewardModel::Poisson.sample(1.0, r),
        1.0,
        1.0,
        &GRID,
        200_000,
        &mut rng(2),
    )
    .unwrap();
    assert!(report.pass());
    for c in report.checks.iter().filter(|c| c.converged) {
        assert!((c.empirical - c.bound).abs() <= 4.0 * c.std_error, "λ = {}", c.lambda);
    }
}

#[test]
fn misclaimed_nu_fails_at_one() {
    assert!((mgf_bound(1.0, 0.1, 1.0) - 2.86).abs() < 0.01);
    let report = check_sub_poisson(
        |r: &mut RngStream| RewardModel::Poisson.sample(1.0, r),
        0.1,
        1.0,
        &GRID,
        100_000,
        &mut rng(3),
    )
    .unwrap();
    assert!(!report.pass());
    assert!(report.violations().any(|c| c.lambda == 1.0));
}

#[test]
fn scaled_bernoulli_passes_with_its_bound() {
    let model = RewardModel::ScaledBernoulli { bound: 2.0 };
    let report =
        check_sub_poisson(|r: &mut RngStream| model.sample(0.6, r), 2.0, 0.6, &GRID, 100_000, &mut rng(4))
            .unwrap();
    assert!(report.pass());
}

/// `|N(1, 1)|` is 1-sub-Gaussian, so it is `σ²/μ`-sub-Poisson.
#[test]
fn folded_normal_meets_sub_gaussian_conversion() {
    let (m, s) = (1.0f64, 1.0f64);
    let mean = s * (2.0 / std::f64::consts::PI).sqrt() * (-m * m / (2.0 * s * s)).exp()
        + m * libm::erf(m / (s * std::f64::consts::SQRT_2));
    let nu = sub_gaussian_nu(s, mean);
    let report = check_sub_poisson(
        |r: &mut RngStream| (m + s * r.sample::<f64, _>(StandardNormal)).abs(),
        nu,
        mean,
        &GRID,
        200_000,
        &mut rng(5),
    )
    .unwrap();
    assert!(report.pass(), "{:?}", report.violations().collect::<Vec<_>>());
}

#[test]
fn too_few_samples_is_an_error() {
    let r = check_sub_poisson(|_: &mut RngStream| 0.0, 1.0, 0.0, &GRID, 10, &mut rng(6));
    assert!(r.is_err());
}

#[test]
fn chernoff_example() {
    // μ = 150, ε = 1/3
    assert!((chernoff_lower_bound(150.0, 1.0 / 3.0) - (-150.0f64 / 18.0).exp()).abs() < 1e-15);
    let check = mc_quota_check(300, 1.0 / 3.0, 100_000, &mut rng(7)).unwrap();
    assert!(check.pass);
    assert!(matches!(check.event, TailEvent::Quota { .. }));
}

fn axis_pulls(k: usize) -> ArmSet {
    let rows: Vec<Vec<f64>> = (0..3)
        .flat_map(|i| {
            let mut e = vec![0.0; 3];
            e[i] = 1.0;
            std::iter::repeat_n(e, k)
        })
        .collect();
    ArmSet::from_rows(&rows).unwrap()
}

#[test]
fn ols_tails_on_axis_design() {
    let pulls = axis_pulls(200);
    let theta = [1.0, 1.0, 1.0];
    let z = [1.0, 0.0, 0.0];
    let est = ProjectedEstimator::new(&pulls, &theta, &z).unwrap();
    assert!((est.leverage() - 1.0 / 200.0).abs() < 1e-15);
    for delta in [0.1, 0.3, 0.5] {
        for direction in [TailDirection::Upper, TailDirection::Lower, TailDirection::TwoSided] {
            let spec = TailBoundSpec { direction, delta, gamma: 1.0 / 200.0, nu: 1.0, mean: 1.0 };
            let report = mc_tail_check(
                &pulls,
                &theta,
                &z,
                RewardModel::Poisson,
                &spec,
                Some(1.5),
                100_000,
                &mut rng(8),
            )
            .unwrap();
            assert!(report.pass(), "{direction:?} δ={delta}: {:?}", report.checks);
        }
    }
}

#[test]
fn leverage_above_gamma_is_rejected() {
    let pulls = axis_pulls(10);
    let spec = TailBoundSpec {
        direction: TailDirection::Upper,
        delta: 0.1,
        gamma: 0.01,
        nu: 1.0,
        mean: 1.0,
    };
    let r = mc_tail_check(
        &pulls,
        &[1.0, 1.0, 1.0],
        &[1.0, 0.0, 0.0],
        RewardModel::Poisson,
        &spec,
        None,
        1000,
        &mut rng(9),
    );
    assert!(matches!(r, Err(Error::LeverageViolated { .. })));
}

#[test]
fn noiseless_rewards_never_deviate() {
    let pulls = axis_pulls(5);
    let spec = TailBoundSpec {
        direction: TailDirection::TwoSided,
        delta: 0.1,
        gamma: 0.2,
        nu: 1.0,
        mean: 1.0,
    };
    let report = mc_tail_check(
        &pulls,
        &[1.0, 1.0, 1.0],
        &[1.0, 0.0, 0.0],
        RewardModel::Deterministic,
        &spec,
        None,
        1000,
        &mut rng(10),
    )
    .unwrap();
    assert!(report.checks.iter().all(|c| c.frequency == 0.0));
}

#[test]
fn rank_deficient_pulls_are_rejected() {
    let pulls = ArmSet::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
    assert!(matches!(
        ProjectedEstimator::new(&pulls, &[1.0, 1.0], &[1.0, 0.0]),
        Err(Error::RankDeficient { .. })
    ));
}

proptest! {
    #[test]
    fn bounds_shrink_with_delta_and_grow_with_gamma(
        d1 in 0.01f64..0.5,
        d2 in 0.5f64..1.0,
        gamma in 0.001f64..0.5,
        nu in 0.1f64..4.0,
        mean in 0.01f64..5.0,
    ) {
        for direction in [TailDirection::Upper, TailDirection::Lower, TailDirection::TwoSided] {
            let b = |delta: f64, gamma: f64| {
                ols_tail_bound(&TailBoundSpec { direction, delta, gamma, nu, mean })
            };
            prop_assert!(b(d2, gamma) <= b(d1, gamma));
            prop_assert!(b(d1, gamma) <= b(d1, 2.0 * gamma));
        }
        // The lower tail is always the tighter one-sided bound.
        let up = ols_tail_bound(&TailBoundSpec { direction: TailDirection::Upper, delta: d1, gamma, nu, mean });
        let lo = ols_tail_bound(&TailBoundSpec { direction: TailDirection::Lower, delta: d1, gamma, nu, mean });
        prop_assert!(lo <= up);
        prop_assert!(alpha_lower_bound(d1, mean, gamma, nu) <= alpha_upper_bound(d1, mean, gamma, nu));
    }

    #[test]
    fn mgf_bound_is_one_at_zero(mean in 0.0f64..10.0, nu in 0.01f64..10.0) {
        prop_assert!((mgf_bound(mean, nu, 0.0) - 1.0).abs() < 1e-15);
    }
}
