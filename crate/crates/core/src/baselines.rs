//! Comparison algorithms run on the same graphs and instances as RSGP.
//!
//! Both use undirected, every-neighbor-every-round communication over the
//! in-neighborhoods of the graph and never sever edges.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DynamicDigraph;
use crate::objective::ObjectiveInstance;
use crate::protocol::{StepSchedule, TrajectorySample};
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::vector::Vector;

/// Total-variation regularized subgradient descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvConfig<T> {
    pub lambda: T,
    pub schedule: StepSchedule<T>,
    pub rounds: usize,
    pub sample_stride: usize,
}

/// Coordinate-wise sorted-extreme filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimConfig<T> {
    pub kappa: usize,
    pub schedule: StepSchedule<T>,
    pub rounds: usize,
    pub sample_stride: usize,
}

#[derive(Debug, Clone)]
pub struct BaselineRun<T> {
    pub x: Vec<Vector<T>>,
    pub trajectory: Vec<TrajectorySample<T>>,
}

fn initial_points<T: Scalar>(n: usize, d: usize, rng: &mut SimRng) -> Vec<Vector<T>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
                .collect::<Vec<_>>()
                .into()
        })
        .collect()
}

fn record<T: Scalar>(out: &mut Vec<TrajectorySample<T>>, round: usize, graph: &DynamicDigraph, x: &[Vector<T>]) {
    out.extend(x.iter().enumerate().map(|(i, xi)| TrajectorySample {
        round,
        node: i,
        x: xi.clone(),
        y: T::one(),
        is_malicious: graph.is_malicious(i),
        is_isolated: false,
    }));
}

fn check_sizes<T: Scalar>(graph: &DynamicDigraph, inst: &ObjectiveInstance<T>) -> Result<()> {
    if graph.n() != inst.n() {
        return Err(Error::Precondition(format!(
            "graph has {} nodes but instance has {} rows",
            graph.n(),
            inst.n()
        )));
    }
    Ok(())
}

fn sign0<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// `x_i <- x_i - eta_t (grad f_i(x_i) + lambda sum_{j in N_i} sign(x_i - x_j))`,
/// synchronously, with `sign(0) = 0`.
pub fn run_tv<T: Scalar>(
    graph: &DynamicDigraph,
    inst: &ObjectiveInstance<T>,
    cfg: &TvConfig<T>,
    mut rng: SimRng,
) -> Result<BaselineRun<T>> {
    check_sizes(graph, inst)?;
    cfg.schedule.validate()?;
    if !(cfg.lambda >= T::zero()) || !cfg.lambda.is_finite() {
        return Err(Error::config("lambda", "must be finite and non-negative"));
    }
    let n = graph.n();
    let mut x = initial_points::<T>(n, inst.d, &mut rng);
    let mut trajectory = Vec::new();
    if cfg.sample_stride > 0 {
        record(&mut trajectory, 0, graph, &x);
    }
    for t in 0..cfg.rounds {
        let eta = cfg.schedule.at(t + 1);
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let mut dir = inst.gradient(i, &x[i])?;
            if cfg.lambda > T::zero() {
                for &j in graph.in_nbrs(i) {
                    for k in 0..inst.d {
                        dir[k] += cfg.lambda * sign0(x[i][k] - x[j][k]);
                    }
                }
            }
            let mut xi = x[i].clone();
            xi.axpy(-eta, &dir);
            next.push(xi);
        }
        x = next;
        let round = t + 1;
        if cfg.sample_stride > 0 && (round % cfg.sample_stride == 0 || round == cfg.rounds) {
            record(&mut trajectory, round, graph, &x);
        }
    }
    Ok(BaselineRun { x, trajectory })
}

/// Mean of `own` and the neighbor values left after dropping the `kappa`
/// largest and `kappa` smallest; `own` alone when fewer than `2 kappa + 1`
/// neighbor values are available.
pub fn trimmed_average<T: Scalar>(own: T, received: &mut [T], kappa: usize) -> T {
    if received.len() < 2 * kappa + 1 {
        return own;
    }
    received.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let kept = &received[kappa..received.len() - kappa];
    (own + kept.iter().copied().sum::<T>()) / T::from_count(kept.len() + 1)
}

/// Each round: coordinate-wise trimmed averaging of neighbor values, then a
/// local subgradient step from the averaged point.
pub fn run_trimmed<T: Scalar>(
    graph: &DynamicDigraph,
    inst: &ObjectiveInstance<T>,
    cfg: &TrimConfig<T>,
    mut rng: SimRng,
) -> Result<BaselineRun<T>> {
    check_sizes(graph, inst)?;
    cfg.schedule.validate()?;
    let n = graph.n();
    let mut x = initial_points::<T>(n, inst.d, &mut rng);
    let mut trajectory = Vec::new();
    if cfg.sample_stride > 0 {
        record(&mut trajectory, 0, graph, &x);
    }
    let mut buf = Vec::new();
    for t in 0..cfg.rounds {
        let eta = cfg.schedule.at(t + 1);
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let mut avg = Vector::zeros(inst.d);
            for k in 0..inst.d {
                buf.clear();
                buf.extend(graph.in_nbrs(i).iter().map(|&j| x[j][k]));
                avg[k] = trimmed_average(x[i][k], &mut buf, cfg.kappa);
            }
            let g = inst.gradient(i, &avg)?;
            avg.axpy(-eta, &g);
            next.push(avg);
        }
        x = next;
        let round = t + 1;
        if cfg.sample_stride > 0 && (round % cfg.sample_stride == 0 || round == cfg.rounds) {
            record(&mut trajectory, round, graph, &x);
        }
    }
    Ok(BaselineRun { x, trajectory })
}
