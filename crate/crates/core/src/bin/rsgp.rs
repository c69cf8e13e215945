use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use rsgp::harness::campaign::{build_instance, trial_seed, CompareRow};
use rsgp::harness::output::{fmt_f64, write_campaign, write_compare, write_sweep};
use rsgp::harness::{oracle_check, run_campaign, run_compare, run_sweep, Aggregate, ExperimentConfig, RunOptions};

/// Robust subgradient-push experiments on Erdos-Renyi networks.
#[derive(Parser)]
#[command(name = "rsgp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    /// Base seed; trial k uses seed + k.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory (overrides experiment.output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    parallel: usize,
    /// Record a trajectory sample every n rounds.
    #[arg(long, global = true)]
    sample_stride: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one Monte Carlo campaign.
    Run { config: PathBuf },
    /// Run the campaign once per value of the [sweep] grid.
    Sweep { config: PathBuf },
    /// Run several configs and tabulate their aggregates side by side.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Print the closed-form reference quantities of the instance.
    Oracle { config: PathBuf },
}

impl Overrides {
    fn load(&self, path: &Path) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.experiment.base_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.experiment.trials = trials;
        }
        if let Some(out) = &self.out {
            cfg.experiment.output_dir = out.clone();
        }
        if let Some(stride) = self.sample_stride {
            cfg.experiment.sample_stride = stride;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            parallel: self.parallel,
        }
    }
}

fn print_aggregate(agg: &Aggregate) {
    println!("{:<24} {:>24} {:>24} {:>6}", "metric", "mean", "stderr", "count");
    for m in &agg.metrics {
        let show = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "-".into());
        println!("{:<24} {:>24} {:>24} {:>6}", m.name, show(m.mean), show(m.stderr), m.count);
    }
    println!("completed {} / aborted {}", agg.completed, agg.aborted);
}

fn print_compare(rows: &[CompareRow]) {
    println!(
        "{:<20} {:<10} {:>24} {:>24} {:>24} {:>10}",
        "config", "algorithm", "epsilon_p", "gamma_p", "varrho", "isolated"
    );
    for r in rows {
        let show = |name: &str| r.aggregate.mean(name).map(fmt_f64).unwrap_or_else(|| "-".into());
        println!(
            "{:<20} {:<10} {:>24} {:>24} {:>24} {:>10}",
            r.name,
            r.algorithm.to_string(),
            show("epsilon_p"),
            show("gamma_p"),
            show("varrho"),
            r.aggregate.mean("isolated").map_or("-".into(), |v| format!("{v:.3}")),
        );
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let ov = &cli.overrides;
    match &cli.command {
        Command::Run { config } => {
            let cfg = ov.load(config)?;
            let res = run_campaign(&cfg, ov.options())?;
            let dir = &cfg.experiment.output_dir;
            write_campaign(&res, dir).with_context(|| format!("writing results to {}", dir.display()))?;
            print_aggregate(&res.aggregate);
            println!("results in {}", dir.display());
        }
        Command::Sweep { config } => {
            let cfg = ov.load(config)?;
            let sweep = run_sweep(&cfg, ov.options())?;
            let dir = &cfg.experiment.output_dir;
            write_sweep(&sweep, dir).with_context(|| format!("writing results to {}", dir.display()))?;
            for (value, res) in &sweep.points {
                println!("== {} = {}", sweep.parameter, value);
                print_aggregate(&res.aggregate);
            }
            println!("results in {}", dir.join("sweep.csv").display());
        }
        Command::Compare { configs } => {
            let loaded = configs
                .iter()
                .map(|p| {
                    let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into());
                    Ok((name, ov.load(p)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = run_compare(&loaded, ov.options())?;
            print_compare(&rows);
            let dir = ov.out.clone().unwrap_or_else(|| loaded[0].1.experiment.output_dir.clone());
            let path = write_compare(&rows, &dir)?;
            println!("table in {}", path.display());
        }
        Command::Oracle { config } => {
            let cfg = ov.load(config)?;
            let seed = if cfg.experiment.resample_instance {
                trial_seed(&cfg, 0)
            } else {
                cfg.instance.seed.unwrap_or(cfg.experiment.base_seed)
            };
            let inst = build_instance(&cfg, seed)?;
            let oracle = oracle_check(&inst)?;
            println!("{}", serde_json::to_string_pretty(&oracle)?);
        }
    }
    Ok(())
}
