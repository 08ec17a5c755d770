use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use linnash_core::metrics::{phase_mean_variance, RunLog};
use serde::Serialize;

use crate::output::{load_logs, load_manifest};
use crate::svg::scatter_chart;

/// Upper bound on plotted points per chart.
pub const MAX_POINTS: usize = 5000;

pub fn default_stride(horizon: usize) -> usize {
    horizon.div_ceil(MAX_POINTS).max(1)
}

/// Rounds `stride, 2·stride, …` up to the horizon.
pub fn downsample(log: &RunLog, stride: usize) -> Result<Vec<(f64, f64)>> {
    if stride == 0 {
        bail!("stride must be at least 1");
    }
    if stride > log.len() {
        bail!("stride {stride} exceeds the horizon {}; nothing to plot", log.len());
    }
    Ok((stride..=log.len())
        .step_by(stride)
        .map(|t| (t as f64, log.rounds[t - 1].true_mean))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseVarianceRow {
    pub algo: String,
    pub run_id: u64,
    pub phase: u32,
    pub rounds: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Writes `scatter_<label>.svg` for every algorithm of a run directory
/// (replica `replica`) and `phase_variance.csv` over all replicas. Returns
/// the written paths.
pub fn write_scatter(dir: &Path, stride: Option<usize>, replica: usize) -> Result<Vec<PathBuf>> {
    let manifest = load_manifest(dir)?;
    let stride = stride.unwrap_or_else(|| default_stride(manifest.horizon));
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for entry in &manifest.algorithms {
        let logs = load_logs(dir, &manifest, &entry.label)?;
        let Some(log) = logs.get(replica) else {
            bail!("{} has {} replicas; replica {replica} requested", entry.label, logs.len());
        };
        let points = downsample(log, stride)?;
        let svg = scatter_chart(
            &format!("{}: pulled arm mean (replica {replica}, every {stride})", entry.label),
            "round t",
            "true mean",
            &points,
        );
        let path = dir.join(format!("scatter_{}.svg", entry.label));
        fs::write(&path, svg)?;
        written.push(path);
        for log in &logs {
            rows.extend(phase_mean_variance(log).into_iter().map(|s| PhaseVarianceRow {
                algo: entry.label.clone(),
                run_id: log.header.replica,
                phase: s.phase,
                rounds: s.rounds,
                mean: s.mean,
                variance: s.variance,
            }));
        }
    }
    let path = dir.join("phase_variance.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}
