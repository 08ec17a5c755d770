//! Linear Thompson Sampling.

use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::arms::{argmax, ArmSet};
use crate::env::{BanditInstance, Lineage, Purpose};
use crate::error::{invalid, Result};
use crate::linalg::{Cholesky, SymMatrix};
use crate::metrics::{RoundRecord, RunHeader, RunLog};

pub const DEFAULT_V: f64 = 0.25;
pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Gaussian posterior sampler with `B = λI + Σ x xᵀ` and `f = Σ r x`.
/// `B` is kept as a Cholesky factor updated in `O(d²)` per round.
#[derive(Debug, Clone)]
pub struct ThompsonSampler {
    chol: Cholesky,
    f: Vec<f64>,
    v: f64,
}

impl ThompsonSampler {
    pub fn new(dim: usize, v: f64, lambda_reg: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid("exploration scale v must be positive"));
        }
        if !(lambda_reg > 0.0 && lambda_reg.is_finite()) {
            return Err(invalid("regularizer must be positive"));
        }
        Ok(Self {
            chol: Cholesky::scaled_identity(dim, lambda_reg),
            f: alloc::vec![0.0; dim],
            v,
        })
    }

    /// Posterior mean `B⁻¹f`.
    pub fn mean(&self) -> Vec<f64> {
        self.chol.solve(&self.f)
    }

    /// `θ̃ = B⁻¹f + v·L⁻ᵀz`, `z ~ N(0, I)`, so `Cov(θ̃) = v²B⁻¹`.
    pub fn sample_theta<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.f.len()).map(|_| rng.sample(StandardNormal)).collect();
        let noise = self.chol.solve_upper(&z);
        let mut theta = self.mean();
        for (t, e) in theta.iter_mut().zip(&noise) {
            *t += self.v * e;
        }
        theta
    }

    pub fn select<R: RngCore + ?Sized>(&self, arms: &ArmSet, rng: &mut R) -> usize {
        let theta = self.sample_theta(rng);
        argmax(&arms.inner_products(&theta))
    }

    pub fn update(&mut self, x: &[f64], reward: f64) {
        self.chol.rank_one_update(x);
        for (f, xi) in self.f.iter_mut().zip(x) {
            *f += reward * xi;
        }
    }

    /// `B` reassembled from its factor.
    pub fn precision(&self) -> SymMatrix {
        self.chol.reconstruct()
    }
}

/// Plays `horizon` rounds of Thompson Sampling.
pub fn run_thompson(
    instance: &BanditInstance,
    horizon: usize,
    v: f64,
    lambda_reg: f64,
    lineage: Lineage,
) -> Result<RunLog> {
    let arms = instance.arms();
    let mut ts = ThompsonSampler::new(arms.dim(), v, lambda_reg)?;
    let mut alg_rng = lineage.stream(Purpose::Algorithm);
    let mut reward_rng = lineage.stream(Purpose::Rewards);
    let mut log = RunLog::with_capacity(RunHeader::new("thompson", instance, lineage), horizon);
    for _ in 0..horizon {
        let arm = ts.select(arms, &mut alg_rng);
        let mean = instance.mean(arm);
        let reward = instance.model().sample(mean, &mut reward_rng);
        ts.update(arms.arm(arm), reward);
        log.push(RoundRecord {
            arm,
            true_mean: mean,
            reward,
            phase: 0,
        });
    }
    Ok(log)
}
