//! Directed communication graph with a regular/malicious node partition.
//!
//! Neighborhoods are stored twice (in- and out-sets) and kept mirror
//! consistent: `j ∈ in(i)` exactly when `i ∈ out(j)`. Self-loops are never
//! stored; the self-message of the push-sum protocol is implicit.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicDigraph {
    in_nbrs: Vec<BTreeSet<NodeId>>,
    out_nbrs: Vec<BTreeSet<NodeId>>,
    malicious: BTreeSet<NodeId>,
}

impl DynamicDigraph {
    /// Graph on `n` nodes with no edges and no malicious nodes.
    pub fn empty(n: usize) -> Self {
        DynamicDigraph {
            in_nbrs: vec![BTreeSet::new(); n],
            out_nbrs: vec![BTreeSet::new(); n],
            malicious: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Adds the directed edge `i -> j`. Self-loops are ignored.
    pub fn add_edge(&mut self, i: NodeId, j: NodeId) -> Result<()> {
        let n = self.n();
        if i >= n || j >= n {
            return Err(Error::invalid(format!("edge ({i}, {j}) outside [0, {n})")));
        }
        if i != j {
            self.out_nbrs[i].insert(j);
            self.in_nbrs[j].insert(i);
        }
        Ok(())
    }

    pub fn add_undirected(&mut self, i: NodeId, j: NodeId) -> Result<()> {
        self.add_edge(i, j)?;
        self.add_edge(j, i)
    }

    pub fn set_malicious<I: IntoIterator<Item = NodeId>>(&mut self, nodes: I) -> Result<()> {
        let set: BTreeSet<NodeId> = nodes.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&m| m >= self.n()) {
            return Err(Error::invalid(format!(
                "malicious node {bad} outside [0, {})",
                self.n()
            )));
        }
        self.malicious = set;
        Ok(())
    }

    pub fn with_malicious<I: IntoIterator<Item = NodeId>>(mut self, nodes: I) -> Result<Self> {
        self.set_malicious(nodes)?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.in_nbrs.len()
    }

    pub fn in_nbrs(&self, i: NodeId) -> &BTreeSet<NodeId> {
        &self.in_nbrs[i]
    }

    pub fn out_nbrs(&self, i: NodeId) -> &BTreeSet<NodeId> {
        &self.out_nbrs[i]
    }

    pub fn malicious(&self) -> &BTreeSet<NodeId> {
        &self.malicious
    }

    pub fn is_malicious(&self, i: NodeId) -> bool {
        self.malicious.contains(&i)
    }

    pub fn regular(&self) -> BTreeSet<NodeId> {
        (0..self.n()).filter(|i| !self.is_malicious(*i)).collect()
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.out_nbrs[i].contains(&j)
    }

    pub fn edge_count(&self) -> usize {
        self.out_nbrs.iter().map(BTreeSet::len).sum()
    }

    /// Directed edges in `(from, to)` order, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.out_nbrs
            .iter()
            .enumerate()
            .flat_map(|(i, out)| out.iter().map(move |&j| (i, j)))
            .collect()
    }

    /// Removes every edge between `i` and `j` in both directions.
    ///
    /// Idempotent: severing an absent pair is a no-op.
    pub fn sever(&mut self, i: NodeId, j: NodeId) {
        self.in_nbrs[i].remove(&j);
        self.out_nbrs[i].remove(&j);
        self.out_nbrs[j].remove(&i);
        self.in_nbrs[j].remove(&i);
    }

    /// Number of remaining directed edges from a malicious node to a regular node.
    pub fn count_attack_edges(&self) -> usize {
        self.malicious
            .iter()
            .map(|&m| {
                self.out_nbrs[m]
                    .iter()
                    .filter(|&&r| !self.is_malicious(r))
                    .count()
            })
            .sum()
    }

    pub fn mirror_consistent(&self) -> bool {
        (0..self.n()).all(|i| {
            self.in_nbrs[i].iter().all(|&j| self.out_nbrs[j].contains(&i))
                && self.out_nbrs[i].iter().all(|&j| self.in_nbrs[j].contains(&i))
                && !self.in_nbrs[i].contains(&i)
        })
    }

    /// True iff every node of `restrict` (default: all nodes) reaches every
    /// other using only edges inside `restrict`.
    pub fn is_strongly_connected(&self, restrict: Option<&BTreeSet<NodeId>>) -> Result<bool> {
        let all;
        let nodes = match restrict {
            Some(r) => r,
            None => {
                all = (0..self.n()).collect::<BTreeSet<_>>();
                &all
            }
        };
        let Some(&root) = nodes.iter().next() else {
            return Err(Error::invalid("empty node restriction"));
        };
        if let Some(&bad) = nodes.iter().find(|&&v| v >= self.n()) {
            return Err(Error::invalid(format!("node {bad} outside [0, {})", self.n())));
        }
        let fwd = self.reach(root, nodes, false);
        if fwd.len() != nodes.len() {
            return Ok(false);
        }
        let bwd = self.reach(root, nodes, true);
        Ok(bwd.len() == nodes.len())
    }

    fn reach(&self, root: NodeId, within: &BTreeSet<NodeId>, reverse: bool) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::from([root]);
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            let nbrs = if reverse {
                &self.in_nbrs[u]
            } else {
                &self.out_nbrs[u]
            };
            for &w in nbrs {
                if within.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Maximal strongly connected components (Kosaraju, iterative).
    ///
    /// Each component is sorted; components are ordered by their smallest node.
    pub fn strongly_connected_components(&self) -> Vec<Vec<NodeId>> {
        self.sccs_within(&(0..self.n()).collect())
    }

    /// Strongly connected components of the subgraph induced by `within`.
    pub fn sccs_within(&self, within: &BTreeSet<NodeId>) -> Vec<Vec<NodeId>> {
        let n = self.n();
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(within.len());
        for &s in within {
            if visited[s] {
                continue;
            }
            visited[s] = true;
            let mut stack: Vec<(NodeId, Vec<NodeId>)> =
                vec![(s, self.out_nbrs[s].iter().rev().copied().collect())];
            while let Some((u, pending)) = stack.last_mut() {
                if let Some(w) = pending.pop() {
                    if within.contains(&w) && !visited[w] {
                        visited[w] = true;
                        let next = self.out_nbrs[w].iter().rev().copied().collect();
                        stack.push((w, next));
                    }
                } else {
                    order.push(*u);
                    stack.pop();
                }
            }
        }
        let mut comp_of = vec![usize::MAX; n];
        let mut comps: Vec<Vec<NodeId>> = Vec::new();
        for &s in order.iter().rev() {
            if comp_of[s] != usize::MAX {
                continue;
            }
            let id = comps.len();
            comp_of[s] = id;
            let mut members = vec![s];
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &w in &self.in_nbrs[u] {
                    if within.contains(&w) && comp_of[w] == usize::MAX {
                        comp_of[w] = id;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps.sort_by_key(|c| c[0]);
        comps
    }

    /// Edge-list text: `# nodes: n`, `# malicious: ...`, then one `i j` per directed edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# nodes: {}", self.n());
        let mal: Vec<String> = self.malicious.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(out, "# malicious: {}", mal.join(" "));
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut malicious = Vec::new();
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::invalid(format!("edge list line {}: {what}", lineno + 1));
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("nodes:") {
                    n = Some(v.trim().parse().map_err(|_| bad("bad node count"))?);
                } else if let Some(v) = rest.strip_prefix("malicious:") {
                    for tok in v.split_whitespace() {
                        malicious.push(tok.parse().map_err(|_| bad("bad malicious id"))?);
                    }
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected `i j`"));
            };
            let i: NodeId = a.parse().map_err(|_| bad("bad source id"))?;
            let j: NodeId = b.parse().map_err(|_| bad("bad target id"))?;
            edges.push((i, j));
        }
        let n = n.unwrap_or_else(|| {
            edges
                .iter()
                .flat_map(|&(i, j)| [i, j])
                .chain(malicious.iter().copied())
                .max()
                .map_or(0, |m| m + 1)
        });
        Self::from_edges(n, &edges)?.with_malicious(malicious)
    }
}

/// Samples an undirected G(n, p) and stores each edge as two directed edges.
///
/// Pairs `{i, j}` with `i < j` are visited in lexicographic order, one uniform
/// draw each, so the result is a pure function of `(n, p, rng state)`.
pub fn gen_erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<DynamicDigraph> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2 nodes, got {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("edge probability {p} outside [0, 1]")));
    }
    let mut g = DynamicDigraph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                g.add_undirected(i, j)?;
            }
        }
    }
    Ok(g)
}

/// Draws G(n, p) graphs from the graph stream of `seed` until one is
/// strongly connected. Returns the graph and the number of draws it took.
///
/// Redraws continue on the same stream, so distinct seeds never share a
/// realization.
pub fn gen_strongly_connected(
    n: usize,
    p: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<(DynamicDigraph, usize)> {
    let mut rng = rng::seeded(seed, Stream::Graph);
    for attempt in 1..=max_attempts {
        let g = gen_erdos_renyi(n, p, &mut rng)?;
        if g.is_strongly_connected(None)? {
            if attempt > 1 {
                log::debug!("graph seed {seed}: strongly connected on draw {attempt}");
            }
            return Ok((g, attempt));
        }
    }
    Err(Error::Precondition(format!(
        "no strongly connected G({n}, {p}) within {max_attempts} draws for seed {seed}"
    )))
}

/// The connectivity regime `3 ln(n) / n` used for the benchmark networks.
pub fn default_edge_probability(n: usize) -> f64 {
    let nf = n as f64;
    (3.0 * nf.ln() / nf).min(1.0)
}
