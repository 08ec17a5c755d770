use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use linnash_core::baselines;
use linnash_core::env::{ArmSource, RewardModel};
use linnash_core::linnash::{LinNashParams, Variant};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    pub horizon: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Curve resolution in rounds.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Log-log axes for the regret plot.
    #[serde(default)]
    pub log_scale: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_replicas() -> usize {
    10
}

fn default_stride() -> usize {
    100
}

fn default_max_mean() -> f64 {
    0.5
}

fn default_model() -> RewardModel {
    RewardModel::Bernoulli
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// Gaussian arms and parameter, shifted and scaled so that means lie in
    /// `[0, max_mean]`.
    Generated {
        dim: usize,
        arms: ArmSource,
        #[serde(default = "default_max_mean")]
        max_mean: f64,
        #[serde(default = "default_model")]
        model: RewardModel,
        /// Overrides the model's own sub-Poisson parameter.
        #[serde(default)]
        nu: Option<f64>,
    },
    /// A serialized instance; relative paths resolve against the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinNashGrid {
    #[serde(default)]
    pub width_scale: Vec<f64>,
    #[serde(default)]
    pub warmup_scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Linnash {
        #[serde(default = "default_variant")]
        variant: Variant,
        #[serde(default)]
        params: LinNashParams,
        /// When set, every grid combination is run and the best one (lowest
        /// final Nash regret) is reported as the tuned entry.
        #[serde(default)]
        tune: Option<LinNashGrid>,
    },
    Thompson {
        #[serde(default = "default_v")]
        v: f64,
        #[serde(default = "default_lambda")]
        lambda_reg: f64,
        #[serde(default)]
        tune_v: Option<Vec<f64>>,
    },
}

fn default_variant() -> Variant {
    Variant::Finite
}

fn default_v() -> f64 {
    baselines::DEFAULT_V
}

fn default_lambda() -> f64 {
    baselines::DEFAULT_LAMBDA
}

/// One concrete algorithm configuration to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Unique, filesystem-safe.
    pub label: String,
    /// Candidates of one family compete during tuning.
    pub family: String,
    pub kind: CandidateKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CandidateKind {
    LinNash { variant: Variant, params: LinNashParams },
    Thompson { v: f64, lambda_reg: f64 },
}

impl AlgorithmSpec {
    pub fn family(&self) -> String {
        match self {
            AlgorithmSpec::Linnash { variant, .. } => variant.tag().to_string(),
            AlgorithmSpec::Thompson { .. } => "thompson".into(),
        }
    }

    pub fn is_tuned(&self) -> bool {
        match self {
            AlgorithmSpec::Linnash { tune, .. } => tune.is_some(),
            AlgorithmSpec::Thompson { tune_v, .. } => tune_v.is_some(),
        }
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        let family = self.family();
        match self {
            AlgorithmSpec::Linnash {
                variant,
                params,
                tune,
            } => {
                let Some(grid) = tune else {
                    return vec![Candidate {
                        label: family.clone(),
                        family,
                        kind: CandidateKind::LinNash {
                            variant: *variant,
                            params: *params,
                        },
                    }];
                };
                let widths = non_empty_or(&grid.width_scale, params.width_scale);
                let warmups = non_empty_or(&grid.warmup_scale, params.warmup_scale);
                let mut out = Vec::new();
                for &w in &widths {
                    for &u in &warmups {
                        out.push(Candidate {
                            label: format!("{family}-w{w}-u{u}"),
                            family: family.clone(),
                            kind: CandidateKind::LinNash {
                                variant: *variant,
                                params: LinNashParams {
                                    width_scale: w,
                                    warmup_scale: u,
                                    ..*params
                                },
                            },
                        });
                    }
                }
                out
            }
            AlgorithmSpec::Thompson {
                v,
                lambda_reg,
                tune_v,
            } => {
                let vs = match tune_v {
                    Some(grid) => non_empty_or(grid, *v),
                    None => {
                        return vec![Candidate {
                            label: family.clone(),
                            family,
                            kind: CandidateKind::Thompson {
                                v: *v,
                                lambda_reg: *lambda_reg,
                            },
                        }]
                    }
                };
                vs.into_iter()
                    .map(|v| Candidate {
                        label: format!("{family}-v{v}"),
                        family: family.clone(),
                        kind: CandidateKind::Thompson {
                            v,
                            lambda_reg: *lambda_reg,
                        },
                    })
                    .collect()
            }
        }
    }
}

fn non_empty_or(grid: &[f64], fallback: f64) -> Vec<f64> {
    if grid.is_empty() {
        vec![fallback]
    } else {
        grid.to_vec()
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if let InstanceSpec::File { path: p } = &mut cfg.instance {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.horizon > 0, "horizon must be positive");
        ensure!(self.replicas > 0, "replicas must be positive");
        ensure!(self.stride > 0, "stride must be positive");
        ensure!(!self.algorithms.is_empty(), "at least one algorithm is required");
        if let InstanceSpec::Generated {
            dim, arms, max_mean, ..
        } = &self.instance
        {
            ensure!(*dim > 0, "instance dimension must be positive");
            ensure!(arms.n_arms() > 0, "arm count must be positive");
            ensure!(*max_mean > 0.0, "max_mean must be positive");
        }
        let mut labels: Vec<String> = self
            .algorithms
            .iter()
            .flat_map(|a| a.candidates())
            .map(|c| c.label)
            .collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            bail!("algorithm label {} appears twice", w[0]);
        }
        Ok(())
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        self.algorithms.iter().flat_map(|a| a.candidates()).collect()
    }
}

pub const PRESETS: &[&str] = &["ts-comparison"];

/// Named configurations. `ts-comparison` is the d=80, |X|=10000, T=50000 Bernoulli
/// comparison of tuned LinNash and tuned Thompson Sampling; `scale` multiplies
/// d, |X| and T.
pub fn preset(name: &str, scale: f64) -> Result<ExperimentConfig> {
    ensure!(scale > 0.0 && scale.is_finite(), "scale must be positive");
    match name {
        "ts-comparison" => {
            let s = |x: f64| ((x * scale).round() as usize).max(1);
            let horizon = s(50_000.0);
            Ok(ExperimentConfig {
                instance: InstanceSpec::Generated {
                    dim: s(80.0),
                    arms: ArmSource::Gaussian {
                        n_arms: s(10_000.0),
                    },
                    max_mean: 0.5,
                    model: RewardModel::Bernoulli,
                    nu: None,
                },
                algorithms: vec![
                    AlgorithmSpec::Linnash {
                        variant: Variant::Finite,
                        params: LinNashParams::default(),
                        tune: Some(LinNashGrid {
                            width_scale: vec![1.0, 0.1, 0.01, 0.003],
                            warmup_scale: vec![1.0, 0.1],
                        }),
                    },
                    AlgorithmSpec::Thompson {
                        v: baselines::DEFAULT_V,
                        lambda_reg: baselines::DEFAULT_LAMBDA,
                        tune_v: Some(vec![0.1, 0.25, 0.5, 1.0]),
                    },
                ],
                horizon,
                replicas: 5,
                master_seed: 0,
                stride: (horizon / 250).max(1),
                log_scale: false,
                output_dir: None,
            })
        }
        other => bail!("unknown preset {other:?}; available: {}", PRESETS.join(", ")),
    }
}
