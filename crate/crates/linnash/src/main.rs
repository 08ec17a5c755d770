use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use linnash::config::{preset, ExperimentConfig, PRESETS};
use linnash::instance::{build_instance, save_instance};
use linnash::runner::run_to_dir;
use linnash::scatter::write_scatter;
use linnash::validate::{run_validation, Suite, ValidateOptions};

#[derive(Parser)]
#[command(name = "linnash", version, about = "Nash-regret linear bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write logs, summary, manifest and regret plot.
    Run(RunArgs),
    /// Plot pulled-arm means over time for every algorithm of a finished run.
    Scatter(ScatterArgs),
    /// Numerically check the design, geometry and concentration machinery.
    Validate(ValidateArgs),
    /// Generate an instance from a config and write it as JSON.
    GenInstance(GenArgs),
}

#[derive(Args)]
struct Source {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,
    /// Shrinks or grows a preset (dimension, arms, horizon).
    #[arg(long, default_value_t = 1.0, requires = "preset")]
    scale: f64,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => preset(name, self.scale)?,
            (None, None) => bail!("either --config or --preset is required"),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Overrides the regret-curve stride.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Args)]
struct ScatterArgs {
    /// Directory of a finished run.
    #[arg(long)]
    out: PathBuf,
    /// Plot every `stride`-th round; defaults to keeping at most 5000 points.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, default_value_t = 0)]
    replica: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo trials per tail check.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    corrupt_nu: bool,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    out: PathBuf,
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = args.source.load()?;
    if let Some(stride) = args.stride {
        cfg.stride = stride;
    }
    let out = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .context("no output directory: pass --out or set output_dir")?;
    let exp = run_to_dir(&cfg, &out, args.workers)?;
    for res in &exp.results {
        let p = res.final_point();
        println!(
            "{:<28} nash {:.5} ± {:.5}  average {:.5}",
            res.candidate.label, p.nash, p.replica_nash_se, p.average
        );
    }
    for (family, res) in exp.tuned_best() {
        println!("tuned {family}: {}", res.candidate.label);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<bool> {
    let opts = ValidateOptions {
        seed: args.seed,
        trials: args.trials,
        corrupt_nu: args.corrupt_nu,
        ..ValidateOptions::default()
    };
    let report = run_validation(args.suite, &opts)?;
    for c in &report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let num = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4e}"));
        println!(
            "{verdict} {:<14} {:<36} bound {} empirical {}  {}",
            c.suite,
            c.name,
            num(c.bound),
            num(c.empirical),
            c.detail
        );
    }
    let failed = report.failures().count();
    println!("{} checks, {failed} failed", report.checks.len());
    if let Some(path) = args.out {
        std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Scatter(a) => write_scatter(&a.out, a.stride, a.replica).map(|paths| {
            for p in paths {
                println!("wrote {}", p.display());
            }
            true
        }),
        Command::Validate(a) => validate(a),
        Command::GenInstance(a) => a.source.load().and_then(|cfg| {
            let inst = build_instance(&cfg.instance, cfg.master_seed)?;
            save_instance(&inst, &a.out)?;
            println!("{} arms, d={}, digest {}", inst.n_arms(), inst.dim(), inst.digest());
            Ok(true)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
