//! Robust Subgradient-Push: push-sum mixing with out-degree two, local
//! subgradient steps, per-neighbor maliciousness scores and threshold-based
//! edge severing.
//!
//! One call to [`round_step`] advances every node from time `t` to `t + 1`.
//! All `t + 1` values are computed from a frozen snapshot of the time-`t`
//! messages, so node iteration order never affects the numbers. Severing
//! decisions of regular nodes are applied in ascending node order after the
//! state update.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DynamicDigraph, NodeId};
use crate::objective::ObjectiveInstance;
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::vector::Vector;

/// Diminishing step size `eta0 / (t + 1)^rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule<T> {
    pub eta0: T,
    pub rho: T,
}

impl<T: Scalar> Default for StepSchedule<T> {
    fn default() -> Self {
        StepSchedule {
            eta0: T::one(),
            rho: T::one(),
        }
    }
}

impl<T: Scalar> StepSchedule<T> {
    /// `sum eta_t` diverges and `sum eta_t^2` converges exactly when
    /// `rho ∈ (1/2, 1]`.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta0 > T::zero()) || !self.eta0.is_finite() {
            return Err(Error::config("eta0", "must be a finite positive number"));
        }
        if !(self.rho > T::half() && self.rho <= T::one()) {
            return Err(Error::config("rho", "must lie in (0.5, 1]"));
        }
        Ok(())
    }

    pub fn at(&self, t: usize) -> T {
        self.eta0 / (T::from_count(t) + T::one()).powf(self.rho)
    }
}

/// Default gradient-norm bound. Without a bound, a node that receives no
/// message for a long streak sees `y` halve every round and its effective
/// step `eta / y` grow until the state overflows.
pub const DEFAULT_GRADIENT_CLIP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// `S~(t) = S~(t-1) + alpha^t S(t)`
    Literal,
    /// `S~(t) = alpha S~(t-1) + S(t)`
    #[default]
    Forgetting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig<T> {
    pub schedule: StepSchedule<T>,
    pub alpha: T,
    pub beta: T,
    pub score_mode: ScoreMode,
    pub detection_start: usize,
    pub detection_enabled: bool,
    pub rounds: usize,
    pub y_floor: T,
    /// Upper bound on the norm of every applied gradient; `None` applies raw gradients.
    pub gradient_clip: Option<T>,
    /// Record every node's state every `sample_stride` rounds; 0 disables.
    pub sample_stride: usize,
}

impl<T: Scalar> Default for ProtocolConfig<T> {
    fn default() -> Self {
        ProtocolConfig {
            schedule: StepSchedule::default(),
            alpha: T::lit(0.9),
            beta: T::lit(1.5),
            score_mode: ScoreMode::Forgetting,
            detection_start: 0,
            detection_enabled: true,
            rounds: 5000,
            y_floor: T::lit(1e-12),
            gradient_clip: Some(T::lit(DEFAULT_GRADIENT_CLIP)),
            sample_stride: 0,
        }
    }
}

impl<T: Scalar> ProtocolConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::config("alpha", "must lie in (0, 1)"));
        }
        if !(self.beta >= T::zero()) {
            return Err(Error::config("beta", "must be non-negative"));
        }
        if self.rounds == 0 {
            return Err(Error::config("rounds", "must be at least 1"));
        }
        if !(self.y_floor > T::zero()) {
            return Err(Error::config("y_floor", "must be positive"));
        }
        if let Some(c) = self.gradient_clip {
            if !(c > T::zero()) {
                return Err(Error::config("gradient_clip", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Rescales `g` onto the ball of radius `bound` when it lies outside.
///
/// For a least-squares row this is the gradient of the Huber loss in the
/// residual, so the clipped local objective stays convex and keeps the same
/// minimizers whenever the bound is inactive there.
pub fn clip_norm<T: Scalar>(g: Vector<T>, bound: Option<T>) -> Vector<T> {
    match bound {
        Some(b) => {
            let norm = g.norm2();
            if norm > b {
                g.scale(b / norm)
            } else {
                g
            }
        }
        None => g,
    }
}

pub fn step_size<T: Scalar>(cfg: &ProtocolConfig<T>, t: usize) -> T {
    cfg.schedule.at(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState<T> {
    pub z: Vector<T>,
    pub v: Vector<T>,
    pub y: T,
    pub x: Vector<T>,
    /// Cumulative score per current in-neighbor.
    pub cum_scores: BTreeMap<NodeId, T>,
    /// Nodes whose message arrived in the last round, always including self.
    pub last_senders: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeverEvent {
    pub round: usize,
    pub severer: NodeId,
    pub severed: NodeId,
}

#[derive(Debug, Clone)]
pub struct SimState<T> {
    pub round: usize,
    pub nodes: Vec<NodeState<T>>,
    pub graph: DynamicDigraph,
    pub rng: SimRng,
    pub sever_log: Vec<SeverEvent>,
    /// Largest gradient norm any node has applied so far.
    pub max_gradient_norm: T,
}

impl<T: Scalar> SimState<T> {
    pub fn total_weight(&self) -> T {
        self.nodes.iter().map(|n| n.y).sum()
    }

    pub fn x(&self) -> Vec<Vector<T>> {
        self.nodes.iter().map(|n| n.x.clone()).collect()
    }
}

/// Fresh state: `z_i(0) ~ N(0, I)` drawn node by node, `y_i(0) = 1`, zero scores.
pub fn init<T: Scalar>(
    graph: &DynamicDigraph,
    inst: &ObjectiveInstance<T>,
    cfg: &ProtocolConfig<T>,
    mut rng: SimRng,
) -> Result<SimState<T>> {
    cfg.validate()?;
    if graph.n() != inst.n() {
        return Err(Error::Precondition(format!(
            "graph has {} nodes but instance has {} rows",
            graph.n(),
            inst.n()
        )));
    }
    if !graph.is_strongly_connected(None)? {
        return Err(Error::Precondition("communication graph is not strongly connected".into()));
    }
    let nodes = (0..graph.n())
        .map(|i| {
            let z: Vector<T> = (0..inst.d)
                .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
                .collect::<Vec<_>>()
                .into();
            NodeState {
                v: z.clone(),
                x: z.clone(),
                z,
                y: T::one(),
                cum_scores: graph.in_nbrs(i).iter().map(|&j| (j, T::zero())).collect(),
                last_senders: BTreeSet::from([i]),
            }
        })
        .collect();
    Ok(SimState {
        round: 0,
        nodes,
        graph: graph.clone(),
        rng,
        sever_log: Vec::new(),
        max_gradient_norm: T::zero(),
    })
}

/// Tracked state of a neighbor: `z / y`.
pub fn xhat<T: Scalar>(z: &Vector<T>, y: T) -> Result<Vector<T>> {
    if !(y > T::zero()) {
        return Err(Error::NumericDegeneracy {
            round: 0,
            node: usize::MAX,
            detail: format!("x-hat with non-positive weight {}", y),
        });
    }
    Ok(z.scale(T::one() / y))
}

/// `(1/eta^2) |sum_{l in senders \ j} (xhat_j - xhat_l)|^2`; zero when `j`
/// is the only sender.
pub fn instantaneous_score<T: Scalar>(
    j: NodeId,
    senders: &BTreeSet<NodeId>,
    xhats: &BTreeMap<NodeId, Vector<T>>,
    eta: T,
) -> T {
    let xj = &xhats[&j];
    let mut acc = Vector::zeros(xj.dim());
    for l in senders.iter().filter(|&&l| l != j) {
        acc.axpy(T::one(), &xj.sub(&xhats[l]));
    }
    acc.norm_sq() / (eta * eta)
}

pub fn update_cumulative_score<T: Scalar>(prev: T, inst_score: T, t: usize, cfg: &ProtocolConfig<T>) -> T {
    match cfg.score_mode {
        ScoreMode::Literal => prev + cfg.alpha.powi(t as i32) * inst_score,
        ScoreMode::Forgetting => cfg.alpha * prev + inst_score,
    }
}

/// Sample mean plus `beta` sample standard deviations, or `None` with fewer
/// than two scores.
pub fn threshold<T: Scalar>(scores: &[T], beta: T) -> Option<T> {
    if scores.len() < 2 {
        return None;
    }
    let n = T::from_count(scores.len());
    let mean = scores.iter().copied().sum::<T>() / n;
    let var = scores.iter().map(|&s| (s - mean) * (s - mean)).sum::<T>() / (n - T::one());
    Some(mean + beta * var.sqrt())
}

/// Severs every in-neighbor of regular node `i` whose cumulative score
/// strictly exceeds `i`'s threshold.
pub fn detect_and_sever<T: Scalar>(state: &mut SimState<T>, i: NodeId, cfg: &ProtocolConfig<T>) -> Vec<NodeId> {
    if state.graph.is_malicious(i) {
        return Vec::new();
    }
    let in_nbrs: Vec<NodeId> = state.graph.in_nbrs(i).iter().copied().collect();
    let scores: Vec<T> = in_nbrs
        .iter()
        .map(|j| state.nodes[i].cum_scores.get(j).copied().unwrap_or_else(T::zero))
        .collect();
    let Some(chi) = threshold(&scores, cfg.beta) else {
        return Vec::new();
    };
    let severed: Vec<NodeId> = in_nbrs
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s > chi)
        .map(|(&j, _)| j)
        .collect();
    for &j in &severed {
        state.graph.sever(i, j);
        state.nodes[i].cum_scores.remove(&j);
        state.nodes[j].cum_scores.remove(&i);
        state.sever_log.push(SeverEvent {
            round: state.round,
            severer: i,
            severed: j,
        });
    }
    severed
}

/// Advances the whole network by one synchronous round.
pub fn round_step<T: Scalar>(
    state: &mut SimState<T>,
    inst: &ObjectiveInstance<T>,
    cfg: &ProtocolConfig<T>,
) -> Result<()> {
    let n = state.nodes.len();
    let t = state.round;

    // Each node talks to itself and one uniformly chosen out-neighbor, and
    // splits its mass evenly over the recipients: 1/2 each, or all of it to
    // itself once its out-neighborhood is empty.
    let mut senders: Vec<BTreeSet<NodeId>> = (0..n).map(|i| BTreeSet::from([i])).collect();
    let mut share = vec![T::one(); n];
    for i in 0..n {
        let out = state.graph.out_nbrs(i);
        if out.is_empty() {
            continue;
        }
        let pick = state.rng.random_range(0..out.len());
        let k = *out.iter().nth(pick).expect("index within out-neighborhood");
        senders[k].insert(i);
        share[i] = T::half();
    }

    let eta_next = step_size(cfg, t + 1);
    let mut next = Vec::with_capacity(n);
    for (i, from) in senders.iter().enumerate() {
        let mut v = Vector::zeros(inst.d);
        let mut y = T::zero();
        for &j in from {
            v.axpy(share[j], &state.nodes[j].z);
            y += share[j] * state.nodes[j].y;
        }
        if !(y >= cfg.y_floor) {
            return Err(Error::NumericDegeneracy {
                round: t,
                node: i,
                detail: format!("weight {} fell below the floor {}", y, cfg.y_floor),
            });
        }
        if !v.is_finite() {
            return Err(Error::NumericDegeneracy {
                round: t,
                node: i,
                detail: "non-finite push-sum numerator".into(),
            });
        }
        let x = v.scale(T::one() / y);
        let g = clip_norm(inst.gradient(i, &x)?, cfg.gradient_clip);
        state.max_gradient_norm = state.max_gradient_norm.max(g.norm2());
        let mut z = v.clone();
        z.axpy(-eta_next, &g);
        next.push((z, v, y, x));
    }

    let detect = cfg.detection_enabled && t >= cfg.detection_start;
    if detect {
        let eta_t = step_size(cfg, t);
        for (i, from) in senders.iter().enumerate() {
            if state.graph.is_malicious(i) || from.len() < 2 {
                continue;
            }
            let xhats = from
                .iter()
                .map(|&j| {
                    xhat(&state.nodes[j].z, state.nodes[j].y)
                        .map(|x| (j, x))
                        .map_err(|_| Error::NumericDegeneracy {
                            round: t,
                            node: j,
                            detail: "non-positive weight in received message".into(),
                        })
                })
                .collect::<Result<BTreeMap<_, _>>>()?;
            for &j in from.iter().filter(|&&j| j != i) {
                let s = instantaneous_score(j, from, &xhats, eta_t);
                if let Some(entry) = state.nodes[i].cum_scores.get_mut(&j) {
                    *entry = update_cumulative_score(*entry, s, t + 1, cfg);
                }
            }
        }
    }

    for (i, (node, (z, v, y, x))) in state.nodes.iter_mut().zip(next).enumerate() {
        node.z = z;
        node.v = v;
        node.y = y;
        node.x = x;
        node.last_senders = std::mem::take(&mut senders[i]);
    }

    if detect {
        for i in 0..n {
            detect_and_sever(state, i, cfg);
        }
    }
    state.round += 1;
    Ok(())
}

/// One row of the trajectory output.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample<T> {
    pub round: usize,
    pub node: NodeId,
    pub x: Vector<T>,
    pub y: T,
    pub is_malicious: bool,
    pub is_isolated: bool,
}

/// Nodes cut off from the honest network: regular nodes outside the largest
/// regular strongly connected component, and malicious nodes with no
/// remaining edge to any regular node.
pub fn isolated_nodes(graph: &DynamicDigraph) -> BTreeSet<NodeId> {
    let regular = graph.regular();
    let mut out = BTreeSet::new();
    if !regular.is_empty() {
        let comps = graph.sccs_within(&regular);
        let largest = comps
            .iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
            .cloned()
            .unwrap_or_default();
        out.extend(regular.iter().filter(|r| !largest.contains(r)));
    }
    for &m in graph.malicious() {
        let touches_regular = graph
            .out_nbrs(m)
            .iter()
            .chain(graph.in_nbrs(m))
            .any(|&k| !graph.is_malicious(k));
        if !touches_regular {
            out.insert(m);
        }
    }
    out
}

pub fn snapshot<T: Scalar>(state: &SimState<T>) -> Vec<TrajectorySample<T>> {
    let isolated = isolated_nodes(&state.graph);
    state
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| TrajectorySample {
            round: state.round,
            node: i,
            x: node.x.clone(),
            y: node.y,
            is_malicious: state.graph.is_malicious(i),
            is_isolated: isolated.contains(&i),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrialRun<T> {
    pub initial_graph: DynamicDigraph,
    pub state: SimState<T>,
    pub trajectory: Vec<TrajectorySample<T>>,
}

/// Runs `cfg.rounds` rounds from a fresh state.
pub fn run_trial<T: Scalar>(
    graph: &DynamicDigraph,
    inst: &ObjectiveInstance<T>,
    cfg: &ProtocolConfig<T>,
    rng: SimRng,
) -> Result<TrialRun<T>> {
    let mut state = init(graph, inst, cfg, rng)?;
    let mut trajectory = Vec::new();
    let stride = cfg.sample_stride;
    if stride > 0 {
        trajectory.extend(snapshot(&state));
    }
    for _ in 0..cfg.rounds {
        round_step(&mut state, inst, cfg)?;
        if stride > 0 && (state.round % stride == 0 || state.round == cfg.rounds) {
            trajectory.extend(snapshot(&state));
        }
    }
    Ok(TrialRun {
        initial_graph: graph.clone(),
        state,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_strongly_connected;
    use crate::objective::{sample_instance, AttackSpec};
    use crate::rng::{seeded, Stream};

    fn cfg() -> ProtocolConfig<f64> {
        ProtocolConfig::default()
    }

    #[test]
    fn step_size_examples() {
        let c = cfg();
        assert_eq!(step_size(&c, 1), 0.5);
        for t in 1..10_000 {
            assert!(step_size(&c, t) > step_size(&c, t + 1));
        }
        let mut bad = cfg();
        bad.schedule.rho = 0.5;
        assert!(bad.validate().is_err());
        bad.schedule.rho = 1.2;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn squared_steps_partial_sums_converge_for_rho_three_quarters() {
        let sched = StepSchedule { eta0: 1.0, rho: 0.75 };
        let mut sum = 0.0f64;
        let mut at_1e5 = 0.0f64;
        for t in 1..=1_000_000usize {
            let e = sched.at(t);
            sum += e * e;
            if t == 100_000 {
                at_1e5 = sum;
            }
        }
        // tail beyond 1e5 is bounded by the integral 2 / sqrt(1e5)
        assert!(sum - at_1e5 < 2.0 / (1e5f64).sqrt());
        assert!(sum < 3.0);
    }

    #[test]
    fn xhat_examples() {
        let z = Vector::from_f64(&[2.0, 4.0]);
        assert_eq!(xhat(&z, 2.0).unwrap(), Vector::from_f64(&[1.0, 2.0]));
        assert_eq!(xhat(&z, 1.0).unwrap(), z);
        assert!(xhat(&z, 0.0).is_err());
    }

    #[test]
    fn score_examples() {
        let xh: BTreeMap<NodeId, Vector<f64>> = [
            (0, Vector::from_f64(&[0.0, 0.0])),
            (1, Vector::from_f64(&[0.0, 0.0])),
            (2, Vector::from_f64(&[1.0, 0.0])),
        ]
        .into();
        let senders = BTreeSet::from([0, 1, 2]);
        assert!((instantaneous_score(2, &senders, &xh, 0.1) - 400.0).abs() < 1e-9);
        assert_eq!(instantaneous_score(2, &BTreeSet::from([2]), &xh, 0.1), 0.0);
        let same: BTreeMap<NodeId, Vector<f64>> =
            (0..3).map(|i| (i, Vector::from_f64(&[1.0, 1.0]))).collect();
        assert_eq!(instantaneous_score(1, &senders, &same, 0.1), 0.0);
    }

    #[test]
    fn cumulative_score_modes() {
        let mut c = cfg();
        c.score_mode = ScoreMode::Literal;
        assert!((update_cumulative_score(0.0, 5.0, 1, &c) - 4.5).abs() < 1e-15);
        assert_eq!(update_cumulative_score(3.0, 0.0, 7, &c), 3.0);
        c.score_mode = ScoreMode::Forgetting;
        assert!((update_cumulative_score(3.0, 0.0, 7, &c) - 2.7).abs() < 1e-15);
    }

    #[test]
    fn threshold_examples() {
        assert!((threshold(&[1.0f64, 2.0, 3.0], 1.5).unwrap() - 3.5).abs() < 1e-15);
        assert_eq!(threshold(&[1.0, 2.0, 3.0], 0.0).unwrap(), 2.0);
        assert_eq!(threshold(&[4.0, 4.0, 4.0], 2.0).unwrap(), 4.0);
        assert!(threshold(&[1.0], 1.0).is_none());
    }

    fn small_state() -> (SimState<f64>, ObjectiveInstance<f64>) {
        let (g, _) = gen_strongly_connected(8, 1.0, 3, 100).unwrap();
        let x_o = Vector::from_f64(&[0.5, -1.0]);
        let inst = sample_instance(8, &x_o, 1.0, 1.0, &mut seeded(3, Stream::Instance)).unwrap();
        let st = init(&g, &inst, &cfg(), seeded(3, Stream::Protocol)).unwrap();
        (st, inst)
    }

    #[test]
    fn severing_outlier_neighbor() {
        let (mut st, _) = small_state();
        let i = 0;
        let nbrs: Vec<NodeId> = st.graph.in_nbrs(i).iter().copied().collect();
        assert!(nbrs.len() >= 5);
        for &j in &nbrs {
            st.nodes[i].cum_scores.insert(j, 1.0);
        }
        let outlier = nbrs[1];
        st.nodes[i].cum_scores.insert(outlier, 1e6);
        let cut = detect_and_sever(&mut st, i, &cfg());
        assert_eq!(cut, vec![outlier]);
        assert!(!st.graph.has_edge(outlier, i) && !st.graph.has_edge(i, outlier));
        assert!(!st.nodes[i].cum_scores.contains_key(&outlier));
        assert_eq!(st.sever_log.len(), 1);
        assert!(st.graph.mirror_consistent());
    }

    #[test]
    fn equal_scores_or_huge_beta_sever_nothing() {
        let (mut st, _) = small_state();
        let mut c = cfg();
        assert!(detect_and_sever(&mut st, 0, &c).is_empty());
        let nbrs: Vec<NodeId> = st.graph.in_nbrs(0).iter().copied().collect();
        for (k, &j) in nbrs.iter().enumerate() {
            st.nodes[0].cum_scores.insert(j, k as f64 * 10.0);
        }
        c.beta = 1e6;
        assert!(detect_and_sever(&mut st, 0, &c).is_empty());
    }

    #[test]
    fn malicious_nodes_never_detect() {
        let (mut st, _) = small_state();
        st.graph.set_malicious([0]).unwrap();
        let nbrs: Vec<NodeId> = st.graph.in_nbrs(0).iter().copied().collect();
        st.nodes[0].cum_scores.insert(nbrs[0], 1e9);
        assert!(detect_and_sever(&mut st, 0, &cfg()).is_empty());
    }

    #[test]
    fn consensus_is_a_fixed_point_of_mixing() {
        let (mut st, inst) = small_state();
        let c = Vector::from_f64(&[0.3, -0.7]);
        for node in &mut st.nodes {
            node.y = 1.0;
            node.z = c.clone();
        }
        round_step(&mut st, &inst, &cfg()).unwrap();
        for node in &st.nodes {
            assert!(node.x.distance(&c, Default::default()) < 1e-15);
        }
    }

    #[test]
    fn two_node_mass_check() {
        let mut g = DynamicDigraph::empty(2);
        g.add_undirected(0, 1).unwrap();
        let inst = sample_instance(2, &Vector::from_f64(&[1.0]), 1.0, 0.0, &mut seeded(1, Stream::Instance))
            .unwrap();
        let mut c = cfg();
        c.detection_enabled = false;
        let mut st = init(&g, &inst, &c, seeded(1, Stream::Protocol)).unwrap();
        st.nodes[0].z = Vector::from_f64(&[2.0]);
        st.nodes[1].z = Vector::from_f64(&[6.0]);
        st.nodes[1].y = 3.0;
        st.nodes[0].y = 1.0;
        // with a single out-neighbor each, 0 -> 1 and 1 -> 0 are forced
        round_step(&mut st, &inst, &c).unwrap();
        assert_eq!(st.nodes[0].v[0], 4.0);
        assert_eq!(st.nodes[1].v[0], 4.0);
        assert_eq!(st.nodes[0].y + st.nodes[1].y, 4.0);
        assert_eq!(st.nodes[0].x[0], 2.0);
    }

    #[test]
    fn cut_off_node_keeps_its_mass() {
        let (mut st, inst) = small_state();
        let mut c = cfg();
        c.detection_enabled = false;
        let nbrs: Vec<NodeId> = st.graph.out_nbrs(0).iter().copied().collect();
        for j in nbrs {
            st.graph.sever(0, j);
        }
        st.nodes[0].y = 0.75;
        let z = st.nodes[0].z.clone();
        round_step(&mut st, &inst, &c).unwrap();
        assert_eq!(st.nodes[0].y, 0.75);
        assert_eq!(st.nodes[0].v, z);
        assert_eq!(st.nodes[0].last_senders, BTreeSet::from([0]));
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = DynamicDigraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let inst = sample_instance(3, &Vector::from_f64(&[1.0]), 1.0, 0.0, &mut seeded(1, Stream::Instance))
            .unwrap();
        assert!(matches!(
            init(&g, &inst, &cfg(), seeded(1, Stream::Protocol)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn y_floor_aborts() {
        let (mut st, inst) = small_state();
        let mut c = cfg();
        c.y_floor = 10.0;
        let err = round_step(&mut st, &inst, &c).unwrap_err();
        assert!(matches!(err, Error::NumericDegeneracy { .. }));
    }

    #[test]
    fn paper_sized_init() {
        let (g, _) = gen_strongly_connected(20, crate::graph::default_edge_probability(20), 1, 100).unwrap();
        let x_o = Vector::from_f64(&[0.0859, -1.4916]);
        let inst = sample_instance(20, &x_o, 1.0, 1.0, &mut seeded(1, Stream::Instance))
            .unwrap()
            .apply_attack(&BTreeSet::from([17, 18, 19]), &AttackSpec::MeanShift { shift: 5.0 })
            .unwrap();
        let a = init(&g, &inst, &cfg(), seeded(5, Stream::Protocol)).unwrap();
        let b = init(&g, &inst, &cfg(), seeded(5, Stream::Protocol)).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.nodes.len(), 20);
        assert!(a.nodes.iter().all(|n| n.z.dim() == 2));
        assert_eq!(a.total_weight(), 20.0);
    }
}
