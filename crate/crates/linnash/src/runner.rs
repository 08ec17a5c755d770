use std::path::Path;

use anyhow::{anyhow, Context, Result};
use linnash_core::baselines::run_thompson;
use linnash_core::env::{BanditInstance, Lineage};
use linnash_core::linnash::{run_linnash_with_plan, PhaseRecord, WarmupPlan};
use linnash_core::metrics::{regret_curve, CurvePoint, RunLog};
use rayon::prelude::*;

use crate::config::{Candidate, CandidateKind, ExperimentConfig};
use crate::instance::build_instance;

/// All replicas of one candidate.
#[derive(Debug, Clone)]
pub struct CandidateResult {
    pub candidate: Candidate,
    pub logs: Vec<RunLog>,
    /// Per replica; empty for algorithms without phases.
    pub phases: Vec<Vec<PhaseRecord>>,
    pub curve: Vec<CurvePoint>,
}

impl CandidateResult {
    pub fn final_point(&self) -> &CurvePoint {
        self.curve.last().expect("curve has the horizon point")
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub instance: BanditInstance,
    pub results: Vec<CandidateResult>,
}

impl Experiment {
    /// For each tuned family, the candidate with the lowest final Nash
    /// regret (first on ties).
    pub fn tuned_best(&self) -> Vec<(String, &CandidateResult)> {
        let mut out: Vec<(String, &CandidateResult)> = Vec::new();
        for spec in self.config.algorithms.iter().filter(|a| a.is_tuned()) {
            let family = spec.family();
            let labels: Vec<String> = spec.candidates().into_iter().map(|c| c.label).collect();
            let best = self
                .results
                .iter()
                .filter(|r| labels.contains(&r.candidate.label))
                .min_by(|a, b| a.final_point().nash.total_cmp(&b.final_point().nash));
            if let Some(best) = best {
                out.push((family, best));
            }
        }
        out
    }

    pub fn result(&self, label: &str) -> Option<&CandidateResult> {
        self.results.iter().find(|r| r.candidate.label == label)
    }
}

enum Prepared {
    LinNash(WarmupPlan),
    Thompson,
}

struct TaskOutput {
    log: RunLog,
    phases: Option<Vec<PhaseRecord>>,
}

/// Runs every (candidate × replica) task on a pool of `workers` threads.
/// Output order depends only on the config, never on scheduling.
pub fn execute(config: &ExperimentConfig, workers: usize) -> Result<Experiment> {
    config.validate()?;
    let instance = build_instance(&config.instance, config.master_seed)?;
    let candidates = config.candidates();
    let prepared: Vec<Prepared> = candidates
        .iter()
        .map(|c| match &c.kind {
            CandidateKind::LinNash { params, .. } => {
                WarmupPlan::new(instance.arms(), params).map(Prepared::LinNash)
            }
            CandidateKind::Thompson { .. } => Ok(Prepared::Thompson),
        })
        .collect::<std::result::Result<_, _>>()
        .context("preparing warm-up designs")?;

    let tasks: Vec<(usize, u64)> = (0..candidates.len())
        .flat_map(|c| (0..config.replicas as u64).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    let outputs: Vec<Result<TaskOutput>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r)| {
                let lineage = Lineage::new(config.master_seed, r);
                let out = match (&candidates[c].kind, &prepared[c]) {
                    (CandidateKind::LinNash { variant, params }, Prepared::LinNash(plan)) => {
                        let run = run_linnash_with_plan(
                            &instance,
                            config.horizon,
                            *variant,
                            params,
                            plan,
                            lineage,
                        )?;
                        TaskOutput {
                            log: run.log,
                            phases: Some(run.phases),
                        }
                    }
                    (CandidateKind::Thompson { v, lambda_reg }, _) => TaskOutput {
                        log: run_thompson(&instance, config.horizon, *v, *lambda_reg, lineage)?,
                        phases: None,
                    },
                    _ => unreachable!("preparation matches candidate kind"),
                };
                Ok(out)
            })
            .collect()
    });

    let mut outputs = outputs.into_iter();
    let mut results = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        let mut logs = Vec::with_capacity(config.replicas);
        let mut phases = Vec::new();
        for _ in 0..config.replicas {
            let out = outputs
                .next()
                .ok_or_else(|| anyhow!("missing task output"))?
                .with_context(|| format!("running {}", candidate.label))?;
            let mut log = out.log;
            log.header.algorithm = candidate.label.clone();
            logs.push(log);
            phases.extend(out.phases);
        }
        let curve = regret_curve(&logs, config.stride)?;
        results.push(CandidateResult {
            candidate,
            logs,
            phases,
            curve,
        });
    }
    Ok(Experiment {
        config: config.clone(),
        instance,
        results,
    })
}

/// Loads, runs and writes an experiment into `out_dir`.
pub fn run_to_dir(config: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<Experiment> {
    let exp = execute(config, workers)?;
    crate::output::write_experiment(&exp, out_dir)?;
    Ok(exp)
}
