//! Run logs and Nash / average regret.
//!
//! The expected reward of round `t` is estimated by averaging the true mean
//! `⟨X_t, θ*⟩` across replicas. Geometric means are accumulated in the log
//! domain and capped by the arithmetic mean of the same values, so
//! `nash ≥ average` holds exactly in floating point.

use alloc::string::String;
use alloc::vec::Vec;

use crate::env::{BanditInstance, Lineage};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunHeader {
    pub algorithm: String,
    pub instance_digest: String,
    pub master_seed: u64,
    pub replica: u64,
    /// `⟨x*, θ*⟩`
    pub optimum: f64,
}

impl RunHeader {
    pub fn new(algorithm: &str, instance: &BanditInstance, lineage: Lineage) -> Self {
        Self {
            algorithm: algorithm.into(),
            instance_digest: instance.digest(),
            master_seed: lineage.master,
            replica: lineage.replica,
            optimum: instance.optimum(),
        }
    }

    pub fn lineage(&self) -> Lineage {
        Lineage::new(self.master_seed, self.replica)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    pub arm: usize,
    pub true_mean: f64,
    pub reward: f64,
    pub phase: u32,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunLog {
    pub header: RunHeader,
    pub rounds: Vec<RoundRecord>,
}

impl RunLog {
    pub fn new(header: RunHeader) -> Self {
        Self {
            header,
            rounds: Vec::new(),
        }
    }

    pub fn with_capacity(header: RunHeader, horizon: usize) -> Self {
        Self {
            header,
            rounds: Vec::with_capacity(horizon),
        }
    }

    pub fn push(&mut self, record: RoundRecord) {
        self.rounds.push(record);
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn true_means(&self) -> impl Iterator<Item = f64> + '_ {
        self.rounds.iter().map(|r| r.true_mean)
    }
}

/// Checks that `logs` describe one algorithm on one instance with a common
/// horizon; returns `(horizon, optimum)`.
pub fn check_logs(logs: &[RunLog]) -> Result<(usize, f64)> {
    let first = logs
        .first()
        .ok_or_else(|| Error::MismatchedLogs("no logs supplied".into()))?;
    let t = first.len();
    for log in &logs[1..] {
        if log.header.instance_digest != first.header.instance_digest {
            return Err(Error::MismatchedLogs("logs come from different instances".into()));
        }
        if log.header.algorithm != first.header.algorithm {
            return Err(Error::MismatchedLogs("logs come from different algorithms".into()));
        }
        if log.len() != t {
            return Err(Error::MismatchedLogs("logs have different horizons".into()));
        }
    }
    Ok((t, first.header.optimum))
}

/// Prefix accumulator over a sequence of per-round expected rewards.
#[derive(Debug, Clone, Copy, Default)]
struct Prefix {
    sum: f64,
    log_sum: f64,
    zero: bool,
    /// The common value while every pushed mean has been identical, so a
    /// constant sequence averages to itself without rounding.
    constant: Option<f64>,
    mixed: bool,
}

impl Prefix {
    fn push(&mut self, m: f64) {
        self.sum += m;
        if m > 0.0 {
            self.log_sum += libm::log(m);
        } else {
            self.zero = true;
        }
        match self.constant {
            None if !self.mixed => self.constant = Some(m),
            Some(c) if c != m => {
                self.constant = None;
                self.mixed = true;
            }
            _ => {}
        }
    }

    fn arithmetic(&self, n: usize) -> f64 {
        self.constant.unwrap_or(self.sum / n as f64)
    }

    fn geometric(&self, n: usize) -> f64 {
        if self.zero {
            0.0
        } else if let Some(c) = self.constant {
            c
        } else {
            libm::exp(self.log_sum / n as f64).min(self.arithmetic(n))
        }
    }
}

/// Cross-replica mean of the true means, per round, for rounds `1..=upto`.
pub fn round_means(logs: &[RunLog], upto: usize) -> Result<Vec<f64>> {
    let (t, _) = check_logs(logs)?;
    if upto == 0 || upto > t {
        return Err(invalid("upto must lie in 1..=T"));
    }
    let mut means = alloc::vec![0.0; upto];
    for log in logs {
        for (m, r) in means.iter_mut().zip(&log.rounds) {
            *m += r.true_mean;
        }
    }
    let r = logs.len() as f64;
    means.iter_mut().for_each(|m| *m /= r);
    Ok(means)
}

fn prefix(logs: &[RunLog], upto: usize) -> Result<(Prefix, f64)> {
    let (_, optimum) = check_logs(logs)?;
    let mut p = Prefix::default();
    for m in round_means(logs, upto)? {
        p.push(m);
    }
    Ok((p, optimum))
}

/// `⟨x*, θ*⟩ − (Π_{t ≤ upto} E[⟨X_t, θ*⟩])^{1/upto}`
pub fn nash_regret(logs: &[RunLog], upto: usize) -> Result<f64> {
    let (p, optimum) = prefix(logs, upto)?;
    Ok(optimum - p.geometric(upto))
}

/// `⟨x*, θ*⟩ − (1/upto) Σ_{t ≤ upto} E[⟨X_t, θ*⟩]`
pub fn average_regret(logs: &[RunLog], upto: usize) -> Result<f64> {
    let (p, optimum) = prefix(logs, upto)?;
    Ok(optimum - p.arithmetic(upto))
}

/// Nash regret of a single replica, using its own true means.
pub fn replica_nash_regret(log: &RunLog, upto: usize) -> Result<f64> {
    nash_regret(core::slice::from_ref(log), upto)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub t: usize,
    pub nash: f64,
    pub average: f64,
    /// Mean over replicas of each replica's own Nash regret.
    pub replica_nash: f64,
    /// Standard error of the per-replica Nash regrets (0 for one replica).
    pub replica_nash_se: f64,
    /// Standard error of the per-replica average regrets.
    pub average_se: f64,
}

/// Regrets at `t = stride, 2·stride, …`; the horizon is always included as
/// the last point. One pass over the logs.
pub fn regret_curve(logs: &[RunLog], stride: usize) -> Result<Vec<CurvePoint>> {
    let (horizon, optimum) = check_logs(logs)?;
    if stride == 0 {
        return Err(invalid("stride must be at least 1"));
    }
    if horizon == 0 {
        return Err(invalid("logs are empty"));
    }
    let means = round_means(logs, horizon)?;
    let mut pooled = Prefix::default();
    let mut each = alloc::vec![Prefix::default(); logs.len()];
    let mut out = Vec::with_capacity(horizon / stride + 1);
    let mut nash_r = alloc::vec![0.0; logs.len()];
    let mut avg_r = alloc::vec![0.0; logs.len()];
    for t in 1..=horizon {
        pooled.push(means[t - 1]);
        for (p, log) in each.iter_mut().zip(logs) {
            p.push(log.rounds[t - 1].true_mean);
        }
        if t % stride == 0 || t == horizon {
            for (i, p) in each.iter().enumerate() {
                nash_r[i] = optimum - p.geometric(t);
                avg_r[i] = optimum - p.arithmetic(t);
            }
            let (replica_nash, replica_nash_se) = mean_and_se(&nash_r);
            let (_, average_se) = mean_and_se(&avg_r);
            out.push(CurvePoint {
                t,
                nash: optimum - pooled.geometric(t),
                average: optimum - pooled.arithmetic(t),
                replica_nash,
                replica_nash_se,
                average_se,
            });
        }
    }
    Ok(out)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var / n as f64))
}

/// Spread of the true means pulled during one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseStats {
    pub phase: u32,
    pub rounds: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Per-phase mean and (population) variance of pulled true means, in order of
/// first appearance.
pub fn phase_mean_variance(log: &RunLog) -> Vec<PhaseStats> {
    let mut out: Vec<(u32, usize, f64, f64)> = Vec::new();
    for r in &log.rounds {
        let slot = match out.iter().position(|s| s.0 == r.phase) {
            Some(i) => i,
            None => {
                out.push((r.phase, 0, 0.0, 0.0));
                out.len() - 1
            }
        };
        // Welford
        let s = &mut out[slot];
        s.1 += 1;
        let delta = r.true_mean - s.2;
        s.2 += delta / s.1 as f64;
        s.3 += delta * (r.true_mean - s.2);
    }
    out.into_iter()
        .map(|(phase, rounds, mean, m2)| PhaseStats {
            phase,
            rounds,
            mean,
            variance: m2 / rounds as f64,
        })
        .collect()
}

/// True if the variances never increase by more than `abs_tol`.
pub fn variance_nonincreasing(stats: &[PhaseStats], abs_tol: f64) -> bool {
    stats
        .windows(2)
        .all(|w| w[1].variance <= w[0].variance + abs_tol)
}
