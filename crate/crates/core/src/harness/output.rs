//! Plot-ready CSV and JSON artifacts. Floats are written with 17 significant
//! digits so reruns can be compared byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::campaign::{Aggregate, CampaignResult, CompareRow, SweepResult, TrialRecord, METRIC_NAMES};
use super::config::{Algorithm, ExperimentConfig};
use crate::error::{Error, Result};
use crate::protocol::{SeverEvent, TrajectorySample};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(
        "trial,seed,instance_seed,graph_draws,status,epsilon_p,varrho,gamma_p,xi_p,attack_edges_remaining,\
         regular_isolated,isolation_round,false_severs,max_gradient_norm\n",
    );
    for r in records {
        let _ = write!(out, "{},{},{},{},", r.trial, r.seed, r.instance_seed, r.graph_draws);
        match r.outcome.report() {
            Some(m) => {
                let _ = writeln!(
                    out,
                    "completed,{},{},{},{},{},{},{},{},{}",
                    fmt_f64(m.epsilon_p),
                    fmt_f64(m.varrho),
                    fmt_f64(m.gamma_p),
                    opt_f64(m.xi_p),
                    m.attack_edges_remaining,
                    m.regular_isolated,
                    opt_usize(m.isolation_round),
                    m.false_severs,
                    fmt_f64(m.max_gradient_norm),
                );
            }
            None => out.push_str("aborted,,,,,,,,,\n"),
        }
    }
    out
}

pub fn aggregate_csv(agg: &Aggregate) -> String {
    let mut out = String::from("metric,mean,stderr,count\n");
    for m in &agg.metrics {
        let _ = writeln!(out, "{},{},{},{}", m.name, opt_f64(m.mean), opt_f64(m.stderr), m.count);
    }
    let _ = writeln!(out, "completed_trials,{},,", agg.completed);
    let _ = writeln!(out, "aborted_trials,{},,", agg.aborted);
    out
}

/// One row per grid value: `value`, then `<metric>_mean` and `<metric>_stderr`.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("parameter,value,completed,aborted");
    for name in METRIC_NAMES {
        let _ = write!(out, ",{name}_mean,{name}_stderr");
    }
    out.push('\n');
    for (value, res) in &sweep.points {
        let agg = &res.aggregate;
        let _ = write!(out, "{},{},{},{}", sweep.parameter, fmt_f64(*value), agg.completed, agg.aborted);
        for m in &agg.metrics {
            let _ = write!(out, ",{},{}", opt_f64(m.mean), opt_f64(m.stderr));
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(algorithm: Algorithm, samples: &[TrajectorySample<f64>]) -> String {
    let d = samples.first().map_or(0, |s| s.x.dim());
    let mut out = String::from("algorithm,round,node");
    for k in 0..d {
        let _ = write!(out, ",x{k}");
    }
    out.push_str(",y,is_malicious,is_isolated\n");
    for s in samples {
        let _ = write!(out, "{algorithm},{},{}", s.round, s.node);
        for v in s.x.iter() {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        let _ = writeln!(out, ",{},{},{}", fmt_f64(s.y), s.is_malicious as u8, s.is_isolated as u8);
    }
    out
}

pub fn sever_log_csv(log: &[SeverEvent]) -> String {
    let mut out = String::from("round,severer,severed\n");
    for e in log {
        let _ = writeln!(out, "{},{},{}", e.round, e.severer, e.severed);
    }
    out
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("name,algorithm,completed,aborted");
    for name in METRIC_NAMES {
        let _ = write!(out, ",{name}_mean,{name}_stderr");
    }
    out.push('\n');
    for row in rows {
        let agg = &row.aggregate;
        let _ = write!(out, "{},{},{},{}", row.name, row.algorithm, agg.completed, agg.aborted);
        for m in &agg.metrics {
            let _ = write!(out, ",{},{}", opt_f64(m.mean), opt_f64(m.stderr));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a ExperimentConfig,
    aggregate: &'a Aggregate,
    trials: &'a [TrialRecord],
}

pub fn report_json(res: &CampaignResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Report {
        config: &res.config,
        aggregate: &res.aggregate,
        trials: &res.records,
    })?)
}

/// Writes `trials.csv`, `aggregate.csv`, `report.json`, and per-trial
/// `sever_log_<k>.csv` (detection runs) and `trajectory_<k>.csv` (when
/// sampling is on). Returns the files written.
pub fn write_campaign(res: &CampaignResult, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, text: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.push(path);
        Ok(())
    };
    put("trials.csv".into(), trials_csv(&res.records))?;
    put("aggregate.csv".into(), aggregate_csv(&res.aggregate))?;
    put("report.json".into(), report_json(res)?)?;
    let algorithm = res.config.experiment.algorithm;
    for r in &res.records {
        if algorithm == Algorithm::Rsgp {
            put(format!("sever_log_{}.csv", r.trial), sever_log_csv(&r.sever_log))?;
        }
        if res.config.experiment.sample_stride > 0 {
            put(format!("trajectory_{}.csv", r.trial), trajectory_csv(algorithm, &r.trajectory))?;
        }
    }
    Ok(written)
}

/// Writes `sweep.csv` plus each grid point's campaign under `<parameter>_<index>/`.
pub fn write_sweep(sweep: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let path = dir.join("sweep.csv");
    write_file(&path, &sweep_csv(sweep))?;
    let mut written = vec![path];
    for (k, (_, res)) in sweep.points.iter().enumerate() {
        written.extend(write_campaign(res, &dir.join(format!("{}_{k}", sweep.parameter)))?);
    }
    Ok(written)
}

pub fn write_compare(rows: &[CompareRow], dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("compare.csv");
    write_file(&path, &compare_csv(rows))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::campaign::{run_campaign, RunOptions};

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn rerun_gives_identical_files() {
        let cfg = ExperimentConfig::from_toml_str(
            "[experiment]\ntrials = 2\nsample_stride = 50\n[graph]\nn = 8\nmalicious = [7]\n[schedule]\nrounds = 100\n",
        )
        .unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let files_a = write_campaign(&run_campaign(&cfg, RunOptions::default()).unwrap(), a.path()).unwrap();
        write_campaign(&run_campaign(&cfg, RunOptions { parallel: 2 }).unwrap(), b.path()).unwrap();
        assert!(files_a.iter().any(|p| p.ends_with("trajectory_1.csv")));
        assert!(files_a.iter().any(|p| p.ends_with("sever_log_0.csv")));
        for f in &files_a {
            let name = f.file_name().unwrap();
            assert_eq!(fs::read(f).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
        }
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let cfg = ExperimentConfig::from_toml_str("[experiment]\ntrials = 1\n[schedule]\nrounds = 10\n").unwrap();
        let res = run_campaign(&cfg, RunOptions::default()).unwrap();
        assert!(matches!(write_campaign(&res, &blocker.join("sub")), Err(Error::Io { .. })));
    }
}
