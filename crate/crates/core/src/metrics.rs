//! Attack-impact and detection-quality metrics over the regular nodes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DynamicDigraph, NodeId};
use crate::objective::ObjectiveInstance;
use crate::protocol::SeverEvent;
use crate::scalar::Scalar;
use crate::vector::{NormOrder, Vector};

fn nonempty<T>(xs: &[T]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::invalid("metric needs at least one regular node"));
    }
    Ok(())
}

/// Mean distance of the final points from the benchmark `x*`.
pub fn avg_solution_difference<T: Scalar>(finals: &[Vector<T>], x_star: &Vector<T>, p: NormOrder) -> Result<T> {
    nonempty(finals)?;
    let total: T = finals.iter().map(|x| x.distance(x_star, p)).sum();
    Ok(total / T::from_count(finals.len()))
}

/// Mean per-node loss increase `f_i(x_i) - f_i(x*)` over `nodes`.
///
/// `finals[k]` is the final point of `nodes[k]`.
pub fn avg_cost_increase<T: Scalar>(
    nodes: &[NodeId],
    finals: &[Vector<T>],
    inst: &ObjectiveInstance<T>,
    x_star: &Vector<T>,
) -> Result<T> {
    nonempty(finals)?;
    if nodes.len() != finals.len() {
        return Err(Error::invalid("one final point per node required"));
    }
    let mut total = T::zero();
    for (&i, x) in nodes.iter().zip(finals) {
        total += inst.loss(i, x)? - inst.loss(i, x_star)?;
    }
    Ok(total / T::from_count(finals.len()))
}

/// Same quantity in the "mean loss minus benchmark cost" form:
/// `(1/N_r) sum f_i(x_i) - F^r(x*)`.
pub fn avg_cost_increase_global_form<T: Scalar>(
    nodes: &[NodeId],
    finals: &[Vector<T>],
    inst: &ObjectiveInstance<T>,
    x_star: &Vector<T>,
) -> Result<T> {
    nonempty(finals)?;
    if nodes.len() != finals.len() {
        return Err(Error::invalid("one final point per node required"));
    }
    let nr = T::from_count(nodes.len());
    let mut at_finals = T::zero();
    let mut at_star = T::zero();
    for (&i, x) in nodes.iter().zip(finals) {
        at_finals += inst.loss(i, x)?;
        at_star += inst.loss(i, x_star)?;
    }
    Ok(at_finals / nr - at_star / nr)
}

/// Mean distance of the final points from their own centroid.
pub fn consensus_deviation<T: Scalar>(finals: &[Vector<T>], p: NormOrder) -> Result<T> {
    nonempty(finals)?;
    let mean = Vector::mean(finals).expect("nonempty");
    let total: T = finals.iter().map(|x| x.distance(&mean, p)).sum();
    Ok(total / T::from_count(finals.len()))
}

/// Mean distance of the final points from the latent parameter, relative to
/// the benchmark's own distance `|x* - x_o|`.
pub fn degradation_ratio<T: Scalar>(
    finals: &[Vector<T>],
    x_star: &Vector<T>,
    x_o: &Vector<T>,
    p: NormOrder,
) -> Result<T> {
    nonempty(finals)?;
    let denom = x_star.distance(x_o, p);
    if denom == T::zero() {
        return Err(Error::UndefinedRatio("benchmark solution equals the latent parameter".into()));
    }
    let num: T = finals.iter().map(|x| x.distance(x_o, p)).sum::<T>() / T::from_count(finals.len());
    Ok(num / denom)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub attack_edges_remaining: usize,
    /// Regular nodes outside the largest regular-only strongly connected component.
    pub regular_isolated: usize,
    /// First round after which no malicious-to-regular edge remains.
    pub isolation_round: Option<usize>,
    /// Severed regular-regular pairs.
    pub false_severs: usize,
}

/// Replays `sever_log` on the initial graph.
pub fn detection_stats(sever_log: &[SeverEvent], initial: &DynamicDigraph) -> DetectionStats {
    let mut g = initial.clone();
    let mut isolation_round = (g.count_attack_edges() == 0).then_some(0);
    let mut false_severs = 0;
    let mut k = 0;
    while k < sever_log.len() {
        let round = sever_log[k].round;
        while k < sever_log.len() && sever_log[k].round == round {
            let ev = sever_log[k];
            if !g.is_malicious(ev.severer) && !g.is_malicious(ev.severed) {
                false_severs += 1;
            }
            g.sever(ev.severer, ev.severed);
            k += 1;
        }
        if isolation_round.is_none() && g.count_attack_edges() == 0 {
            isolation_round = Some(round);
        }
    }
    DetectionStats {
        attack_edges_remaining: g.count_attack_edges(),
        regular_isolated: regular_isolated(&g),
        isolation_round,
        false_severs,
    }
}

pub fn regular_isolated(g: &DynamicDigraph) -> usize {
    let regular = g.regular();
    if regular.is_empty() {
        return 0;
    }
    let largest = g.sccs_within(&regular).iter().map(Vec::len).max().unwrap_or(0);
    regular.len() - largest
}

/// Final metrics of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport<T> {
    pub epsilon_p: T,
    pub varrho: T,
    pub gamma_p: T,
    /// `None` when `x* = x_o` and the ratio is undefined.
    pub xi_p: Option<T>,
    pub p: f64,
    pub attack_edges_remaining: usize,
    pub regular_isolated: usize,
    pub isolation_round: Option<usize>,
    pub false_severs: usize,
    pub max_gradient_norm: T,
    /// Regular centroid when the regular nodes agree to within `CONSENSUS_TOL`.
    pub consensus_value: Option<Vector<T>>,
}

pub const CONSENSUS_TOL: f64 = 1e-3;

/// Everything a report needs besides the final points.
pub struct ReportInputs<'a, T> {
    pub inst: &'a ObjectiveInstance<T>,
    pub regular: &'a BTreeSet<NodeId>,
    pub x_star: &'a Vector<T>,
    pub p: NormOrder,
    pub detection: DetectionStats,
    pub max_gradient_norm: T,
}

pub fn trial_report<T: Scalar>(all_finals: &[Vector<T>], inputs: ReportInputs<'_, T>) -> Result<TrialReport<T>> {
    let nodes: Vec<NodeId> = inputs.regular.iter().copied().collect();
    let finals: Vec<Vector<T>> = nodes.iter().map(|&i| all_finals[i].clone()).collect();
    let epsilon_p = avg_solution_difference(&finals, inputs.x_star, inputs.p)?;
    let varrho = avg_cost_increase(&nodes, &finals, inputs.inst, inputs.x_star)?;
    let gamma_p = consensus_deviation(&finals, inputs.p)?;
    let xi_p = match degradation_ratio(&finals, inputs.x_star, &inputs.inst.x_o, inputs.p) {
        Ok(v) => Some(v),
        Err(Error::UndefinedRatio(_)) => None,
        Err(e) => return Err(e),
    };
    let consensus_value = (gamma_p.to_f64_lossy() <= CONSENSUS_TOL).then(|| Vector::mean(&finals).expect("nonempty"));
    Ok(TrialReport {
        epsilon_p,
        varrho,
        gamma_p,
        xi_p,
        p: inputs.p.0,
        attack_edges_remaining: inputs.detection.attack_edges_remaining,
        regular_isolated: inputs.detection.regular_isolated,
        isolation_round: inputs.detection.isolation_round,
        false_severs: inputs.detection.false_severs,
        max_gradient_norm: inputs.max_gradient_norm,
        consensus_value,
    })
}
