use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use linnash_core::metrics::{RoundRecord, RunHeader, RunLog};
use serde::{Deserialize, Serialize};

use crate::instance::save_instance;
use crate::runner::Experiment;
use crate::svg::{line_chart, Series};

/// One row of a per-replica run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run_id: u64,
    pub algo: String,
    pub t: usize,
    pub arm_index: usize,
    pub true_mean: f64,
    pub reward: f64,
    pub phase: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algo: String,
    pub t: usize,
    pub nash_regret: f64,
    pub average_regret: f64,
    pub replica_nash_regret: f64,
    pub replica_nash_se: f64,
    pub average_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub run_id: u64,
    pub algo: String,
    pub phase: u32,
    pub t_prime: f64,
    pub rounds: usize,
    pub support: usize,
    pub surviving_before: usize,
    pub surviving_after: usize,
    pub estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: String,
    pub family: String,
    /// Relative to the output directory, in replica order.
    pub runs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedChoice {
    pub family: String,
    pub label: String,
    pub final_nash_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub instance_digest: String,
    pub optimum: f64,
    pub horizon: usize,
    pub replicas: usize,
    pub master_seed: u64,
    pub algorithms: Vec<ManifestEntry>,
    pub tuned: Vec<TunedChoice>,
}

pub const MANIFEST: &str = "manifest.json";

fn run_path(label: &str, replica: usize) -> PathBuf {
    Path::new("runs").join(label).join(format!("replica_{replica:04}.csv"))
}

pub fn write_run_csv(log: &RunLog, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for (i, r) in log.rounds.iter().enumerate() {
        w.serialize(RunRow {
            run_id: log.header.replica,
            algo: log.header.algorithm.clone(),
            t: i + 1,
            arm_index: r.arm,
            true_mean: r.true_mean,
            reward: r.reward,
            phase: r.phase,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_run_csv(path: &Path) -> Result<Vec<RunRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<RunRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    for (i, row) in rows.iter().enumerate() {
        if row.t != i + 1 {
            bail!("{}: rounds are not contiguous at row {}", path.display(), i + 1);
        }
    }
    Ok(rows)
}

fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary_rows(exp: &Experiment) -> Vec<SummaryRow> {
    exp.results
        .iter()
        .flat_map(|res| {
            res.curve.iter().map(|p| SummaryRow {
                algo: res.candidate.label.clone(),
                t: p.t,
                nash_regret: p.nash,
                average_regret: p.average,
                replica_nash_regret: p.replica_nash,
                replica_nash_se: p.replica_nash_se,
                average_se: p.average_se,
            })
        })
        .collect()
}

/// Writes config, instance, manifest, run logs, summary, phases, tuning
/// choices and the regret plot.
pub fn write_experiment(exp: &Experiment, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    fs::write(out_dir.join("config.json"), exp.config.to_json()?)?;
    save_instance(&exp.instance, &out_dir.join("instance.json"))?;

    let mut entries = Vec::new();
    let mut phase_rows = Vec::new();
    for res in &exp.results {
        let label = &res.candidate.label;
        fs::create_dir_all(out_dir.join("runs").join(label))?;
        let mut runs = Vec::new();
        for (r, log) in res.logs.iter().enumerate() {
            let rel = run_path(label, r);
            write_run_csv(log, &out_dir.join(&rel))?;
            runs.push(rel);
        }
        for (log, phases) in res.logs.iter().zip(&res.phases) {
            phase_rows.extend(phases.iter().map(|p| PhaseRow {
                run_id: log.header.replica,
                algo: label.clone(),
                phase: p.phase,
                t_prime: p.t_prime,
                rounds: p.rounds,
                support: p.support,
                surviving_before: p.surviving_before,
                surviving_after: p.surviving_after,
                estimated: p.estimated,
            }));
        }
        entries.push(ManifestEntry {
            label: label.clone(),
            family: res.candidate.family.clone(),
            runs,
        });
    }
    write_csv(summary_rows(exp), &out_dir.join("summary.csv"))?;
    if !phase_rows.is_empty() {
        write_csv(phase_rows, &out_dir.join("phases.csv"))?;
    }

    let tuned: Vec<TunedChoice> = exp
        .tuned_best()
        .into_iter()
        .map(|(family, res)| TunedChoice {
            family,
            label: res.candidate.label.clone(),
            final_nash_regret: res.final_point().nash,
        })
        .collect();
    let manifest = Manifest {
        instance_digest: exp.instance.digest(),
        optimum: exp.instance.optimum(),
        horizon: exp.config.horizon,
        replicas: exp.config.replicas,
        master_seed: exp.config.master_seed,
        algorithms: entries,
        tuned,
    };
    fs::write(
        out_dir.join(MANIFEST),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    fs::write(out_dir.join("regret.svg"), regret_plot(exp))?;
    Ok(())
}

/// Untuned candidates plus the winner of each tuned family.
fn regret_plot(exp: &Experiment) -> String {
    let tuned = exp.tuned_best();
    let tuned_labels: Vec<String> = exp
        .config
        .algorithms
        .iter()
        .filter(|a| a.is_tuned())
        .flat_map(|a| a.candidates())
        .map(|c| c.label)
        .collect();
    let mut series = Vec::new();
    for res in &exp.results {
        if tuned_labels.contains(&res.candidate.label) {
            continue;
        }
        series.push(curve_series(res.candidate.label.clone(), res));
    }
    for (family, res) in tuned {
        series.push(curve_series(
            format!("{family} (tuned: {})", res.candidate.label),
            res,
        ));
    }
    line_chart(
        "Nash regret",
        "round t",
        "Nash regret",
        &series,
        exp.config.log_scale,
    )
}

fn curve_series(label: String, res: &crate::runner::CandidateResult) -> Series {
    Series {
        label,
        points: res.curve.iter().map(|p| (p.t as f64, p.nash)).collect(),
    }
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path)
        .with_context(|| format!("no completed run in {} (missing {MANIFEST})", dir.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads the logs of `label` back from a run directory.
pub fn load_logs(dir: &Path, manifest: &Manifest, label: &str) -> Result<Vec<RunLog>> {
    let entry = manifest
        .algorithms
        .iter()
        .find(|e| e.label == label)
        .with_context(|| format!("no algorithm {label} in manifest"))?;
    entry
        .runs
        .iter()
        .enumerate()
        .map(|(r, rel)| {
            let rows = read_run_csv(&dir.join(rel))?;
            if rows.len() != manifest.horizon {
                bail!("{}: expected {} rounds", rel.display(), manifest.horizon);
            }
            Ok(RunLog {
                header: RunHeader {
                    algorithm: label.to_string(),
                    instance_digest: manifest.instance_digest.clone(),
                    master_seed: manifest.master_seed,
                    replica: r as u64,
                    optimum: manifest.optimum,
                },
                rounds: rows
                    .into_iter()
                    .map(|row| RoundRecord {
                        arm: row.arm_index,
                        true_mean: row.true_mean,
                        reward: row.reward,
                        phase: row.phase,
                    })
                    .collect(),
            })
        })
        .collect()
}
