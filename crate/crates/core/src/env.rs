//! Bandit instances, reward models and seeded random streams.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use sha2::{Digest, Sha256};

use crate::arms::ArmSet;
use crate::error::{invalid, Error, Result};
use crate::linalg::dot;

/// Slack below zero (or above a model's upper bound) tolerated in arm means
/// before they are clamped; covers rounding in the shift-and-scale step.
const MEAN_SLACK: f64 = 1e-12;

/// Distribution of the reward observed when pulling an arm with mean `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum RewardModel {
    /// Reward in {0, 1} with success probability `μ`; 1-sub-Poisson.
    Bernoulli,
    /// Poisson(`μ`); 1-sub-Poisson.
    Poisson,
    /// `B · Bernoulli(μ / B)`; B-sub-Poisson.
    ScaledBernoulli { bound: f64 },
    /// Always exactly `μ` (zero variance).
    Deterministic,
}

impl RewardModel {
    pub fn name(&self) -> &'static str {
        match self {
            RewardModel::Bernoulli => "bernoulli",
            RewardModel::Poisson => "poisson",
            RewardModel::ScaledBernoulli { .. } => "scaled_bernoulli",
            RewardModel::Deterministic => "deterministic",
        }
    }

    /// Sub-Poisson parameter implied by the model.
    pub fn nu(&self) -> f64 {
        match self {
            RewardModel::ScaledBernoulli { bound } => *bound,
            _ => 1.0,
        }
    }

    /// Largest admissible mean.
    pub fn max_mean(&self) -> f64 {
        match self {
            RewardModel::Bernoulli => 1.0,
            RewardModel::ScaledBernoulli { bound } => *bound,
            RewardModel::Poisson | RewardModel::Deterministic => f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<()> {
        if let RewardModel::ScaledBernoulli { bound } = self {
            if !(*bound > 0.0 && bound.is_finite()) {
                return Err(invalid("scaled Bernoulli bound must be positive"));
            }
        }
        Ok(())
    }

    /// Draws one reward with mean `mean`, which must lie in the model's range.
    pub fn sample<R: RngCore + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match self {
            RewardModel::Bernoulli => bernoulli(mean, rng),
            RewardModel::Poisson => {
                if mean > 0.0 {
                    Poisson::new(mean).expect("positive finite rate").sample(rng)
                } else {
                    0.0
                }
            }
            RewardModel::ScaledBernoulli { bound } => bound * bernoulli(mean / bound, rng),
            RewardModel::Deterministic => mean,
        }
    }

    /// Sum of `count` independent rewards with mean `mean`, drawn in one step
    /// (binomial or Poisson as appropriate).
    pub fn sample_sum<R: RngCore + ?Sized>(&self, mean: f64, count: u64, rng: &mut R) -> f64 {
        if count == 0 {
            return 0.0;
        }
        let binomial = |p: f64, rng: &mut R| -> f64 {
            Binomial::new(count, p.clamp(0.0, 1.0))
                .expect("probability in [0, 1]")
                .sample(rng) as f64
        };
        match self {
            RewardModel::Bernoulli => binomial(mean, rng),
            RewardModel::Poisson => {
                let rate = mean * count as f64;
                if rate > 0.0 {
                    Poisson::new(rate).expect("positive finite rate").sample(rng)
                } else {
                    0.0
                }
            }
            RewardModel::ScaledBernoulli { bound } => bound * binomial(mean / bound, rng),
            RewardModel::Deterministic => mean * count as f64,
        }
    }
}

fn bernoulli<R: RngCore + ?Sized>(p: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

/// Arms, hidden parameter `θ*` and reward model.
#[derive(Debug, Clone)]
pub struct BanditInstance {
    arms: ArmSet,
    theta_star: Vec<f64>,
    model: RewardModel,
    nu: f64,
    means: Vec<f64>,
}

impl BanditInstance {
    /// Validates that every mean `⟨x, θ*⟩` is nonnegative and admissible for
    /// the model. `nu` defaults to the model's own parameter.
    pub fn new(
        arms: ArmSet,
        theta_star: Vec<f64>,
        model: RewardModel,
        nu: Option<f64>,
    ) -> Result<Self> {
        model.validate()?;
        if theta_star.len() != arms.dim() {
            return Err(Error::DimensionMismatch {
                expected: arms.dim(),
                found: theta_star.len(),
            });
        }
        let nu = nu.unwrap_or_else(|| model.nu());
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(invalid("sub-Poisson parameter must be positive"));
        }
        let upper = model.max_mean();
        let mut means = arms.inner_products(&theta_star);
        for (arm, m) in means.iter_mut().enumerate() {
            let slack = MEAN_SLACK * m.abs().max(1.0);
            if !m.is_finite() || *m < -slack || *m > upper + slack * upper.max(1.0) {
                return Err(Error::MeanOutOfRange {
                    arm,
                    mean: *m,
                    model: model.name(),
                });
            }
            *m = m.clamp(0.0, upper);
        }
        Ok(Self {
            arms,
            theta_star,
            model,
            nu,
            means,
        })
    }

    pub fn arms(&self) -> &ArmSet {
        &self.arms
    }

    pub fn dim(&self) -> usize {
        self.arms.dim()
    }

    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn model(&self) -> RewardModel {
        self.model
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `⟨x, θ*⟩` per arm (tiny rounding negatives clamped to zero).
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    /// `⟨x*, θ*⟩`
    pub fn optimum(&self) -> f64 {
        self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of an optimal arm (first on ties).
    pub fn best_arm(&self) -> usize {
        crate::arms::argmax(&self.means)
    }

    /// Same arms and parameter with a different reward model.
    pub fn with_model(&self, model: RewardModel) -> Result<Self> {
        Self::new(self.arms.clone(), self.theta_star.clone(), model, None)
    }

    /// Hex SHA-256 over dimension, arms, `θ*`, model and `ν`.
    pub fn digest(&self) -> alloc::string::String {
        let mut h = Sha256::new();
        h.update((self.dim() as u64).to_le_bytes());
        for v in self.arms.as_flat().iter().chain(&self.theta_star) {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(self.model.name().as_bytes());
        if let RewardModel::ScaledBernoulli { bound } = self.model {
            h.update(bound.to_bits().to_le_bytes());
        }
        h.update(self.nu.to_bits().to_le_bytes());
        let out = h.finalize();
        let mut s = alloc::string::String::with_capacity(64);
        for b in out.iter() {
            use core::fmt::Write;
            let _ = write!(s, "{b:02x}");
        }
        s
    }
}

/// Draws a reward for `arm`.
pub fn sample_reward<R: RngCore + ?Sized>(
    instance: &BanditInstance,
    arm: usize,
    rng: &mut R,
) -> Result<f64> {
    if arm >= instance.n_arms() {
        return Err(Error::ArmIndex {
            index: arm,
            len: instance.n_arms(),
        });
    }
    Ok(instance.model.sample(instance.means[arm], rng))
}

/// Where the raw arm vectors come from before shifting and scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ArmSource {
    /// i.i.d. standard Gaussian vectors.
    Gaussian { n_arms: usize },
    /// A random proxy net of the unit sphere: normalized Gaussian vectors.
    SphereNet { net_size: usize },
}

impl ArmSource {
    pub fn n_arms(&self) -> usize {
        match self {
            ArmSource::Gaussian { n_arms } => *n_arms,
            ArmSource::SphereNet { net_size } => *net_size,
        }
    }
}

fn gaussian_vec<R: RngCore + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Random instance: `θ*` and the raw arms are standard Gaussian; the arms are
/// shifted along `θ*` until the smallest mean is zero and then scaled so that
/// the largest mean equals `max_mean`.
pub fn generate_instance<R: RngCore + ?Sized>(
    d: usize,
    source: ArmSource,
    max_mean: f64,
    model: RewardModel,
    rng: &mut R,
) -> Result<BanditInstance> {
    model.validate()?;
    let n = source.n_arms();
    if d == 0 || n == 0 {
        return Err(invalid("dimension and arm count must be positive"));
    }
    if !(max_mean > 0.0 && max_mean <= model.max_mean()) {
        return Err(invalid("max_mean must lie in (0, model upper bound]"));
    }
    let mut theta = gaussian_vec(d, rng);
    while dot(&theta, &theta) == 0.0 {
        theta = gaussian_vec(d, rng);
    }
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut x = gaussian_vec(d, rng);
            if let ArmSource::SphereNet { .. } = source {
                let len = crate::linalg::norm(&x);
                if len > 0.0 {
                    x.iter_mut().for_each(|v| *v /= len);
                }
            }
            x
        })
        .collect();
    let tt = dot(&theta, &theta);
    let means: Vec<f64> = rows.iter().map(|x| dot(x, &theta)).collect();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 0.0 {
        let scale = max_mean / (hi - lo);
        for x in rows.iter_mut() {
            for (xi, ti) in x.iter_mut().zip(&theta) {
                *xi = (*xi - lo / tt * ti) * scale;
            }
        }
    } else {
        // every arm has the same mean: shift them all to max_mean
        let shift = (max_mean - lo) / tt;
        for x in rows.iter_mut() {
            for (xi, ti) in x.iter_mut().zip(&theta) {
                *xi += shift * ti;
            }
        }
    }
    let arms = ArmSet::new(d, &rows)?;
    BanditInstance::new(arms, theta, model, None)
}

/// What a random stream is used for; part of its lineage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Instance,
    Rewards,
    Algorithm,
    Validation,
    Other(u16),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Instance => 1,
            Purpose::Rewards => 2,
            Purpose::Algorithm => 3,
            Purpose::Validation => 4,
            Purpose::Other(t) => 0x1_0000 + t as u64,
        }
    }
}

/// Seed lineage: master seed plus replica index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lineage {
    pub master: u64,
    pub replica: u64,
}

impl Lineage {
    pub fn new(master: u64, replica: u64) -> Self {
        Self { master, replica }
    }

    pub fn stream(self, purpose: Purpose) -> RngStream {
        RngStream::new(self, purpose)
    }
}

/// ChaCha12 keyed by the master seed, with the 64-bit stream id derived from
/// `(replica, purpose)`. Distinct lineages never share a keystream, and no
/// stream depends on how much another stream has been consumed.
#[derive(Debug, Clone)]
pub struct RngStream {
    lineage: Lineage,
    purpose: Purpose,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(lineage: Lineage, purpose: Purpose) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(lineage.master);
        // 40 bits of replica, 24 bits of purpose
        let stream = (lineage.replica << 24) ^ (purpose.tag() & 0xff_ffff);
        rng.set_stream(stream);
        Self {
            lineage,
            purpose,
            rng,
        }
    }

    pub fn lineage(&self) -> Lineage {
        self.lineage
    }

    pub fn purpose(&self) -> Purpose {
        self.purpose
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single(mean: f64, model: RewardModel) -> BanditInstance {
        let arms = ArmSet::from_rows(&[vec![1.0]]).unwrap();
        BanditInstance::new(arms, vec![mean], model, None).unwrap()
    }

    #[test]
    fn bernoulli_zero_mean_is_always_zero() {
        let inst = single(0.0, RewardModel::Bernoulli);
        let mut rng = Lineage::new(1, 0).stream(Purpose::Rewards);
        for _ in 0..10_000 {
            assert_eq!(sample_reward(&inst, 0, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn bernoulli_mean_above_one_rejected() {
        let arms = ArmSet::from_rows(&[vec![1.0]]).unwrap();
        let err = BanditInstance::new(arms, vec![1.2], RewardModel::Bernoulli, None).unwrap_err();
        assert!(matches!(err, Error::MeanOutOfRange { arm: 0, .. }));
    }

    #[test]
    fn negative_mean_rejected() {
        let arms = ArmSet::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        assert!(BanditInstance::new(arms, vec![0.5], RewardModel::Poisson, None).is_err());
    }

    #[test]
    fn scaled_bernoulli_takes_values_zero_or_bound() {
        let inst = single(0.6, RewardModel::ScaledBernoulli { bound: 2.0 });
        assert_eq!(inst.nu(), 2.0);
        let mut rng = Lineage::new(3, 0).stream(Purpose::Rewards);
        for _ in 0..1000 {
            let r = sample_reward(&inst, 0, &mut rng).unwrap();
            assert!(r == 0.0 || r == 2.0);
        }
    }

    #[test]
    fn deterministic_model_returns_mean() {
        let inst = single(0.37, RewardModel::Deterministic);
        let mut rng = Lineage::new(3, 0).stream(Purpose::Rewards);
        assert_eq!(sample_reward(&inst, 0, &mut rng).unwrap(), 0.37);
        assert!(sample_reward(&inst, 1, &mut rng).is_err());
    }

    #[test]
    fn generated_means_are_pinned() {
        for seed in 0..20 {
            let mut rng = Lineage::new(seed, 0).stream(Purpose::Instance);
            let inst = generate_instance(
                4,
                ArmSource::Gaussian { n_arms: 30 },
                0.5,
                RewardModel::Bernoulli,
                &mut rng,
            )
            .unwrap();
            let lo = inst.means().iter().copied().fold(f64::INFINITY, f64::min);
            assert!(lo >= 0.0 && lo < 1e-12);
            assert!((inst.optimum() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_generated_arm_has_max_mean() {
        let mut rng = Lineage::new(9, 0).stream(Purpose::Instance);
        let inst = generate_instance(
            3,
            ArmSource::Gaussian { n_arms: 1 },
            0.5,
            RewardModel::Bernoulli,
            &mut rng,
        )
        .unwrap();
        assert!((inst.mean(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = Lineage::new(5, 2).stream(Purpose::Rewards);
        let mut b = Lineage::new(5, 2).stream(Purpose::Rewards);
        let mut c = Lineage::new(5, 3).stream(Purpose::Rewards);
        let mut d = Lineage::new(5, 2).stream(Purpose::Algorithm);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        let xd: Vec<u64> = (0..8).map(|_| d.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_ne!(xa, xd);
    }

    #[test]
    fn digest_changes_with_model() {
        let a = single(0.5, RewardModel::Bernoulli);
        let b = a.with_model(RewardModel::Poisson).unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
