//! Seeded Monte Carlo campaigns, parameter sweeps and the closed-form oracle.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Algorithm, ExperimentConfig, SweepParameter, VarrhoForm};
use crate::baselines::{run_trimmed, run_tv};
use crate::error::{Error, Result};
use crate::graph::{gen_strongly_connected, DynamicDigraph};
use crate::metrics::{avg_cost_increase_global_form, detection_stats, trial_report, ReportInputs};
use crate::objective::sample_instance;
use crate::protocol::{run_trial, SeverEvent, TrajectorySample};
use crate::rng::{seeded, Stream};
use crate::vector::NormOrder;
use crate::{Instance64, TrialReport64, Vector64};

/// Closed-form reference quantities of one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Oracle {
    /// Minimizer over the regular nodes.
    pub x_star: Vector64,
    /// Minimizer over all nodes, attack included.
    pub x_a: Vector64,
    /// Smallest eigenvalue of the regular nodes' averaged Hessian.
    pub lambda_min: f64,
    /// `|sum_{m in V_m} g_m(x^a)|_2`
    pub attack_gradient_norm: f64,
    /// `lambda_min |x^a - x*|_2`
    pub bound: f64,
    pub bound_holds: bool,
}

/// Relative slack allowed when checking `attack_gradient_norm >= bound`.
pub const ORACLE_REL_TOL: f64 = 1e-8;

pub fn oracle_check(inst: &Instance64) -> Result<Oracle> {
    let regular = inst.regular();
    if regular.is_empty() {
        return Err(Error::Precondition("instance has no regular nodes".into()));
    }
    let x_star = inst.closed_form_solution(&regular)?;
    let x_a = inst.closed_form_solution(&inst.all_nodes())?;
    let lambda_min = inst.hessian_min_eigenvalue(&regular)?;
    if !(lambda_min > 0.0) {
        return Err(Error::Singular(format!(
            "regular Hessian is not positive definite (smallest eigenvalue {lambda_min:e})"
        )));
    }
    let attack_gradient_norm = inst.summed_gradient(&inst.malicious, &x_a)?.norm2();
    let bound = lambda_min * x_a.distance(&x_star, NormOrder::L2);
    let bound_holds = attack_gradient_norm - bound >= -ORACLE_REL_TOL * bound.max(f64::MIN_POSITIVE);
    Ok(Oracle {
        x_star,
        x_a,
        lambda_min,
        attack_gradient_norm,
        bound,
        bound_holds,
    })
}

/// Draws the instance for `seed` and applies the configured attack.
pub fn build_instance(cfg: &ExperimentConfig, seed: u64) -> Result<Instance64> {
    let x_o = Vector64::from_f64(&cfg.instance.x_o);
    let clean = sample_instance(
        cfg.graph.n,
        &x_o,
        cfg.instance.h_sigma,
        cfg.instance.noise_sigma,
        &mut seeded(seed, Stream::Instance),
    )?;
    clean.apply_attack(&cfg.malicious(), &cfg.attack.spec(cfg.d())?)
}

pub fn build_graph(cfg: &ExperimentConfig, seed: u64) -> Result<(DynamicDigraph, usize)> {
    let (g, draws) = gen_strongly_connected(cfg.graph.n, cfg.graph.edge_probability(), seed, cfg.graph.max_attempts)?;
    Ok((g.with_malicious(cfg.malicious())?, draws))
}

pub fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    cfg.experiment.base_seed.wrapping_add(trial as u64)
}

fn instance_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    if cfg.experiment.resample_instance {
        trial_seed(cfg, trial)
    } else {
        cfg.instance.seed.unwrap_or(cfg.experiment.base_seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Completed { report: TrialReport64 },
    /// The run hit a numeric guard; no metrics are reported.
    Aborted { reason: String },
}

impl TrialOutcome {
    pub fn report(&self) -> Option<&TrialReport64> {
        match self {
            TrialOutcome::Completed { report } => Some(report),
            TrialOutcome::Aborted { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub instance_seed: u64,
    /// Graph draws needed to obtain a strongly connected realization.
    pub graph_draws: usize,
    pub oracle: Oracle,
    #[serde(flatten)]
    pub outcome: TrialOutcome,
    #[serde(skip)]
    pub initial_graph: DynamicDigraph,
    /// Final point of every node, malicious ones included.
    #[serde(skip)]
    pub finals: Vec<Vector64>,
    #[serde(skip)]
    pub sever_log: Vec<SeverEvent>,
    #[serde(skip)]
    pub trajectory: Vec<TrajectorySample<f64>>,
}

/// Runs trial `trial` of `cfg`. `shared` is the fixed instance and its oracle
/// when instances are not resampled.
pub fn run_one(cfg: &ExperimentConfig, trial: usize, shared: Option<&(Instance64, Oracle)>) -> Result<TrialRecord> {
    let seed = trial_seed(cfg, trial);
    let instance_seed = instance_seed(cfg, trial);
    let owned;
    let (inst, oracle) = match shared {
        Some((inst, oracle)) => (inst, oracle.clone()),
        None => {
            owned = build_instance(cfg, instance_seed)?;
            let oracle = oracle_check(&owned)?;
            (&owned, oracle)
        }
    };
    let (graph, graph_draws) = build_graph(cfg, seed)?;
    let rng = seeded(seed, Stream::Protocol);

    let run = match cfg.experiment.algorithm {
        Algorithm::Rsgp | Algorithm::SgpPlain => run_trial(&graph, inst, &cfg.protocol_config()?, rng).map(|r| {
            let mgn = r.state.max_gradient_norm;
            (r.state.x(), r.state.sever_log, r.trajectory, mgn)
        }),
        Algorithm::Tv => run_tv(&graph, inst, &cfg.tv_config(), rng).map(|r| (r.x, Vec::new(), r.trajectory, 0.0)),
        Algorithm::Trimmed => {
            run_trimmed(&graph, inst, &cfg.trim_config(), rng).map(|r| (r.x, Vec::new(), r.trajectory, 0.0))
        }
    };
    let (finals, sever_log, trajectory, max_gradient_norm) = match run {
        Ok(parts) => parts,
        Err(e @ Error::NumericDegeneracy { .. }) => {
            log::warn!("trial {trial} (seed {seed}) aborted: {e}");
            return Ok(TrialRecord {
                trial,
                seed,
                instance_seed,
                graph_draws,
                oracle,
                outcome: TrialOutcome::Aborted { reason: e.to_string() },
                initial_graph: graph,
                finals: Vec::new(),
                sever_log: Vec::new(),
                trajectory: Vec::new(),
            });
        }
        Err(e) => return Err(e),
    };

    let regular = inst.regular();
    let detection = detection_stats(&sever_log, &graph);
    let mut report = trial_report(
        &finals,
        ReportInputs {
            inst,
            regular: &regular,
            x_star: &oracle.x_star,
            p: cfg.norm(),
            detection,
            max_gradient_norm,
        },
    )?;
    if cfg.experiment.varrho_form == VarrhoForm::Global {
        let nodes: Vec<_> = regular.iter().copied().collect();
        let reg_finals: Vec<_> = nodes.iter().map(|&i| finals[i].clone()).collect();
        report.varrho = avg_cost_increase_global_form(&nodes, &reg_finals, inst, &oracle.x_star)?;
    }
    Ok(TrialRecord {
        trial,
        seed,
        instance_seed,
        graph_draws,
        oracle,
        outcome: TrialOutcome::Completed { report },
        initial_graph: graph,
        finals,
        sever_log,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub name: &'static str,
    /// `None` when no completed trial defines the metric.
    pub mean: Option<f64>,
    /// Standard error of the mean; zero with fewer than two samples.
    pub stderr: Option<f64>,
    pub count: usize,
}

impl MetricSummary {
    fn of(name: &'static str, xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return MetricSummary {
                name,
                mean: None,
                stderr: None,
                count,
            };
        }
        let n = count as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let stderr = if count < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        };
        MetricSummary {
            name,
            mean: Some(mean),
            stderr: Some(stderr),
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub completed: usize,
    pub aborted: usize,
    pub metrics: Vec<MetricSummary>,
}

/// Metric names in output order. `isolated` is 1 for a trial that ends with
/// no malicious-to-regular edge, so its mean is the isolation rate.
pub const METRIC_NAMES: [&str; 10] = [
    "epsilon_p",
    "varrho",
    "gamma_p",
    "xi_p",
    "attack_edges_remaining",
    "regular_isolated",
    "false_severs",
    "isolation_round",
    "isolated",
    "max_gradient_norm",
];

/// One trial's value of metric `name`, or `None` when it is undefined.
pub fn metric_value(r: &TrialReport64, name: &str) -> Option<f64> {
    match name {
        "epsilon_p" => Some(r.epsilon_p),
        "varrho" => Some(r.varrho),
        "gamma_p" => Some(r.gamma_p),
        "xi_p" => r.xi_p,
        "attack_edges_remaining" => Some(r.attack_edges_remaining as f64),
        "regular_isolated" => Some(r.regular_isolated as f64),
        "false_severs" => Some(r.false_severs as f64),
        "isolation_round" => r.isolation_round.map(|t| t as f64),
        "isolated" => Some(if r.attack_edges_remaining == 0 { 1.0 } else { 0.0 }),
        "max_gradient_norm" => Some(r.max_gradient_norm),
        _ => None,
    }
}

/// Per-metric mean and standard error over completed trials, reduced in
/// trial-index order.
pub fn aggregate(records: &[TrialRecord]) -> Aggregate {
    let reports: Vec<&TrialReport64> = records.iter().filter_map(|r| r.outcome.report()).collect();
    let metrics = METRIC_NAMES
        .iter()
        .map(|&name| {
            let xs: Vec<f64> = reports.iter().filter_map(|r| metric_value(r, name)).collect();
            MetricSummary::of(name, &xs)
        })
        .collect();
    Aggregate {
        completed: reports.len(),
        aborted: records.len() - reports.len(),
        metrics,
    }
}

impl Aggregate {
    pub fn get(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn mean(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|m| m.mean)
    }
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub aggregate: Aggregate,
}

/// Worker pool size; 0 lets rayon pick.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub parallel: usize,
}

fn pool(opts: RunOptions) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallel)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Runs every trial of `cfg` and aggregates. Outputs are independent of the
/// worker count.
pub fn run_campaign(cfg: &ExperimentConfig, opts: RunOptions) -> Result<CampaignResult> {
    cfg.validate()?;
    let shared = if cfg.experiment.resample_instance {
        None
    } else {
        let inst = build_instance(cfg, instance_seed(cfg, 0))?;
        let oracle = oracle_check(&inst)?;
        Some((inst, oracle))
    };
    let records = pool(opts)?.install(|| {
        (0..cfg.experiment.trials)
            .into_par_iter()
            .map(|k| run_one(cfg, k, shared.as_ref()))
            .collect::<Result<Vec<_>>>()
    })?;
    let aggregate = aggregate(&records);
    Ok(CampaignResult {
        config: cfg.clone(),
        records,
        aggregate,
    })
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub points: Vec<(f64, CampaignResult)>,
}

/// One campaign per grid value. Trial `k` of every grid value uses the same
/// seeds, hence the same graph, instance and initial state.
pub fn run_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<SweepResult> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "config has no [sweep] section"))?;
    let points = sweep
        .values
        .iter()
        .map(|&v| Ok((v, run_campaign(&cfg.with_parameter(sweep.parameter, v)?, opts)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        parameter: sweep.parameter,
        points,
    })
}

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub name: String,
    pub algorithm: Algorithm,
    pub aggregate: Aggregate,
}

pub fn run_compare(configs: &[(String, ExperimentConfig)], opts: RunOptions) -> Result<Vec<CompareRow>> {
    configs
        .iter()
        .map(|(name, cfg)| {
            Ok(CompareRow {
                name: name.clone(),
                algorithm: cfg.experiment.algorithm,
                aggregate: run_campaign(cfg, opts)?.aggregate,
            })
        })
        .collect()
}
