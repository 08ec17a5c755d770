use linnash_core::env::{
    generate_instance, sample_reward, ArmSource, BanditInstance, Lineage, Purpose, RewardModel,
};
use linnash_core::ArmSet;
use proptest::prelude::*;
use rand::RngCore;

#[test]
fn bernoulli_mean_over_a_million_draws() {
    let arms = ArmSet::from_rows(&[vec![1.0]]).unwrap();
    let inst = BanditInstance::new(arms, vec![0.3], RewardModel::Bernoulli, None).unwrap();
    let mut rng = Lineage::new(1, 0).stream(Purpose::Rewards);
    let n = 1_000_000;
    let sum: f64 = (0..n).map(|_| sample_reward(&inst, 0, &mut rng).unwrap()).sum();
    assert!((sum / n as f64 - 0.3).abs() <= 0.002);
}

#[test]
fn poisson_variance_over_a_million_draws() {
    let mut rng = Lineage::new(2, 0).stream(Purpose::Rewards);
    let n = 1_000_000;
    let xs: Vec<f64> = (0..n).map(|_| RewardModel::Poisson.sample(2.0, &mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    assert!((var - 2.0).abs() <= 0.02, "variance {var}");
}

#[test]
fn batched_sums_match_single_draw_means() {
    let mut rng = Lineage::new(3, 0).stream(Purpose::Rewards);
    let model = RewardModel::ScaledBernoulli { bound: 2.0 };
    let total: f64 = (0..2000).map(|_| model.sample_sum(0.5, 500, &mut rng)).sum();
    let mean = total / (2000.0 * 500.0);
    assert!((mean - 0.5).abs() < 0.01);
    assert_eq!(RewardModel::Deterministic.sample_sum(0.25, 8, &mut rng), 2.0);
}

#[test]
fn out_of_range_means_are_rejected() {
    let arms = ArmSet::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
    assert!(BanditInstance::new(arms.clone(), vec![0.5], RewardModel::Bernoulli, None).is_err());
    let arms = ArmSet::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
    assert!(BanditInstance::new(arms.clone(), vec![0.5], RewardModel::Bernoulli, None).is_err());
    assert!(BanditInstance::new(arms, vec![0.5], RewardModel::Poisson, None).is_ok());
}

#[test]
fn single_arm_instance_sits_at_max_mean() {
    let mut rng = Lineage::new(4, 0).stream(Purpose::Instance);
    let inst = generate_instance(3, ArmSource::Gaussian { n_arms: 1 }, 0.5, RewardModel::Bernoulli, &mut rng)
        .unwrap();
    assert!((inst.mean(0) - 0.5).abs() < 1e-12);
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let draw = |l: Lineage, p: Purpose| -> Vec<u64> {
        let mut s = l.stream(p);
        (0..4).map(|_| s.next_u64()).collect()
    };
    let a = Lineage::new(9, 1);
    assert_eq!(draw(a, Purpose::Rewards), draw(a, Purpose::Rewards));
    assert_ne!(draw(a, Purpose::Rewards), draw(a, Purpose::Algorithm));
    assert_ne!(draw(a, Purpose::Rewards), draw(Lineage::new(9, 2), Purpose::Rewards));
    assert_ne!(draw(a, Purpose::Rewards), draw(Lineage::new(10, 1), Purpose::Rewards));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_means_span_zero_to_max(
        d in 1usize..=12,
        n in 1usize..=200,
        max_mean in 0.01f64..=1.0,
        sphere in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let source = if sphere {
            ArmSource::SphereNet { net_size: n }
        } else {
            ArmSource::Gaussian { n_arms: n }
        };
        let mut rng = Lineage::new(seed, 0).stream(Purpose::Instance);
        let inst = generate_instance(d, source, max_mean, RewardModel::Bernoulli, &mut rng).unwrap();
        let lo = inst.means().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(lo >= 0.0);
        prop_assert!((inst.optimum() - max_mean).abs() <= 1e-12);
        prop_assert_eq!(inst.means()[inst.best_arm()], inst.optimum());
        prop_assert_eq!(inst.n_arms(), n);
    }

    #[test]
    fn digest_tracks_content(seed in any::<u64>()) {
        let mut rng = Lineage::new(seed, 0).stream(Purpose::Instance);
        let inst = generate_instance(3, ArmSource::Gaussian { n_arms: 5 }, 0.5, RewardModel::Bernoulli, &mut rng)
            .unwrap();
        let again = BanditInstance::new(
            inst.arms().clone(),
            inst.theta_star().to_vec(),
            inst.model(),
            Some(inst.nu()),
        )
        .unwrap();
        prop_assert_eq!(inst.digest(), again.digest());
        let poisson = inst.with_model(RewardModel::Poisson).unwrap();
        prop_assert_ne!(inst.digest(), poisson.digest());
    }
}
