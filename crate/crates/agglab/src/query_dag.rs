//! Directed acyclic graphs of elicitable queries.
//!
//! Each node is a query asked of one agent; its edges point at the targets the
//! quadratic score compares it against, with target `Y` standing for the
//! aggregation target itself. A node's value must equal the conditional
//! expectation, given its agent's information, of the weighted sum of its
//! targets' values; truthful reporting is then the unique equilibrium, and a
//! unilateral deviation of size `delta` loses exactly `delta^2` in expected
//! payment.
//!
//! Three complexity measures are reported: query count, order (longest payment
//! chain down to `Y`), and agent reach (distinct agents answering downstream
//! queries). Canonical mode reads them off the graph as written; exact mode
//! minimizes over every consistent re-targeting of the same query set.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::linear_form::{LinearForm, COEFF_TOL};
use crate::mask::Universe;
use crate::signal_model::{SampleDraw, SignalModel};

/// Exact complexity minimization is refused above this query count.
pub const MAX_EXACT_QUERIES: usize = 10;

/// Reserved id for the aggregation target in serialized form.
pub const SINK_ID: &str = "Y";

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum TargetRef {
    /// The aggregation target `Y`.
    Sink,
    Node(String),
}

impl TargetRef {
    pub fn node(id: impl Into<String>) -> Self {
        TargetRef::Node(id.into())
    }

    pub fn id(&self) -> &str {
        match self {
            TargetRef::Sink => SINK_ID,
            TargetRef::Node(id) => id,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QueryNode {
    id: String,
    agent: usize,
    targets: Vec<(TargetRef, f64)>,
    value: LinearForm,
}

impl QueryNode {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn targets(&self) -> &[(TargetRef, f64)] {
        &self.targets
    }

    pub fn value(&self) -> &LinearForm {
        &self.value
    }
}

#[derive(Clone, Debug)]
pub struct QueryDag {
    universe: Universe,
    nodes: Vec<QueryNode>,
    index: BTreeMap<String, usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ComplexityMode {
    /// Read the measures off the graph as constructed.
    Canonical,
    /// Minimize order and agent reach over all consistent re-targetings.
    Exact,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct ComplexityReport {
    pub query_c: usize,
    pub order_c: usize,
    pub agent_c: usize,
    /// True when order/agent were minimized over re-targetings.
    pub exact: bool,
}

#[derive(Clone, PartialEq, Debug)]
pub enum Violation {
    UnknownTarget { node: String, target: String },
    EmptyTargets { node: String },
    Cycle { nodes: Vec<String> },
    SinkUnreachable { node: String },
    /// Stored value differs from the conditional expectation of the weighted
    /// target sum; `deviation` is the largest coefficient difference.
    ValueMismatch { node: String, deviation: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownTarget { node, target } => {
                write!(f, "node {node:?} targets unknown id {target:?}")
            }
            Violation::EmptyTargets { node } => write!(f, "node {node:?} has no targets"),
            Violation::Cycle { nodes } => write!(f, "cycle through {}", nodes.join(" -> ")),
            Violation::SinkUnreachable { node } => {
                write!(f, "node {node:?} cannot reach the target")
            }
            Violation::ValueMismatch { node, deviation } => write!(
                f,
                "node {node:?} value differs from its derivation (max coefficient deviation {deviation:e})"
            ),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl QueryDag {
    pub fn new(universe: Universe) -> Self {
        QueryDag { universe, nodes: Vec::new(), index: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.universe.n()
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[QueryNode] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&QueryNode> {
        self.index.get(id).map(|&k| &self.nodes[k])
    }

    fn check_new_node(&self, id: &str, agent: usize, targets: &[(TargetRef, f64)]) -> Result<()> {
        if id.is_empty() || id == SINK_ID {
            return Err(Error::ReservedNodeId(id.to_string()));
        }
        if self.index.contains_key(id) {
            return Err(Error::DuplicateNodeId(id.to_string()));
        }
        if agent < 1 || agent > self.n() {
            return Err(Error::AgentOutOfRange { agent, n: self.n() });
        }
        for (target, alpha) in targets {
            if !alpha.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite weight on edge {id:?} -> {:?}",
                    target.id()
                )));
            }
            if let TargetRef::Node(t) = target {
                if t == id {
                    return Err(Error::InvalidArgument(format!("node {id:?} targets itself")));
                }
            }
        }
        Ok(())
    }

    /// Adds a node with an explicitly stored value. Targets may reference
    /// nodes that do not exist yet; `validate` reports dangling references.
    pub fn add_node(
        &mut self,
        id: impl Into<String>,
        agent: usize,
        targets: Vec<(TargetRef, f64)>,
        value: LinearForm,
    ) -> Result<()> {
        let id = id.into();
        self.check_new_node(&id, agent, &targets)?;
        if value.n() != self.n() {
            return Err(Error::AgentCountMismatch { left: self.n(), right: value.n() });
        }
        self.index.insert(id.clone(), self.nodes.len());
        self.nodes.push(QueryNode { id, agent, targets, value });
        Ok(())
    }

    /// Adds a node whose value is derived from its targets, which must all
    /// resolve already.
    pub fn add_node_derived(
        &mut self,
        id: impl Into<String>,
        agent: usize,
        targets: Vec<(TargetRef, f64)>,
    ) -> Result<()> {
        let id = id.into();
        self.check_new_node(&id, agent, &targets)?;
        let value = self.derived_value(agent, &targets)?;
        self.index.insert(id.clone(), self.nodes.len());
        self.nodes.push(QueryNode { id, agent, targets, value });
        Ok(())
    }

    /// The value a node with these targets must elicit: the conditional
    /// expectation, given `agent`, of the weighted sum of target values.
    pub fn derived_value(&self, agent: usize, targets: &[(TargetRef, f64)]) -> Result<LinearForm> {
        let mut sum = LinearForm::zero(self.n())?;
        for (target, alpha) in targets {
            let value = match target {
                TargetRef::Sink => LinearForm::y_form(&self.universe),
                TargetRef::Node(id) => self
                    .node(id)
                    .ok_or_else(|| Error::UnknownNode(id.clone()))?
                    .value()
                    .clone(),
            };
            sum = sum.add(&value.scale(*alpha))?;
        }
        sum.condition_on_agent(agent)
    }

    /// Checks structure (targets resolve, acyclic, every node reaches `Y`)
    /// and semantics (each stored value equals its derivation from stored
    /// neighbor values, to coefficient tolerance 1e-12).
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let m = self.nodes.len();

        let mut resolved = vec![true; m];
        for (k, node) in self.nodes.iter().enumerate() {
            if node.targets.is_empty() {
                report.violations.push(Violation::EmptyTargets { node: node.id.clone() });
            }
            for (target, _) in &node.targets {
                if let TargetRef::Node(id) = target {
                    if !self.index.contains_key(id) {
                        resolved[k] = false;
                        report.violations.push(Violation::UnknownTarget {
                            node: node.id.clone(),
                            target: id.clone(),
                        });
                    }
                }
            }
        }

        // Node-to-node adjacency over resolved edges.
        let adj: Vec<Vec<usize>> = self
            .nodes
            .iter()
            .map(|node| {
                node.targets
                    .iter()
                    .filter_map(|(t, _)| match t {
                        TargetRef::Node(id) => self.index.get(id).copied(),
                        TargetRef::Sink => None,
                    })
                    .collect()
            })
            .collect();

        if let Some(cycle) = find_cycle(m, &adj) {
            let nodes = cycle.into_iter().map(|k| self.nodes[k].id.clone()).collect();
            report.violations.push(Violation::Cycle { nodes });
        }

        // Sink reachability by fixpoint; correct even in cyclic graphs.
        let direct: Vec<bool> = self
            .nodes
            .iter()
            .map(|n| n.targets.iter().any(|(t, _)| matches!(t, TargetRef::Sink)))
            .collect();
        let mut reaches = direct;
        loop {
            let mut changed = false;
            for k in 0..m {
                if !reaches[k] && adj[k].iter().any(|&j| reaches[j]) {
                    reaches[k] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for k in 0..m {
            if !reaches[k] && !self.nodes[k].targets.is_empty() && resolved[k] {
                report
                    .violations
                    .push(Violation::SinkUnreachable { node: self.nodes[k].id.clone() });
            }
        }

        for (k, node) in self.nodes.iter().enumerate() {
            if !resolved[k] || node.targets.is_empty() {
                continue;
            }
            let derived = self
                .derived_value(node.agent, &node.targets)
                .expect("targets resolved");
            let deviation = node.value.max_abs_diff(&derived);
            if deviation > COEFF_TOL {
                report
                    .violations
                    .push(Violation::ValueMismatch { node: node.id.clone(), deviation });
            }
        }

        report
    }

    fn require_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidDag(report.to_string()))
        }
    }

    fn node_adjacency(&self) -> Vec<Vec<usize>> {
        self.nodes
            .iter()
            .map(|node| {
                node.targets
                    .iter()
                    .filter_map(|(t, _)| match t {
                        TargetRef::Node(id) => self.index.get(id).copied(),
                        TargetRef::Sink => None,
                    })
                    .collect()
            })
            .collect()
    }

    /// Longest edge count from each node down to the sink.
    fn levels(&self) -> Vec<usize> {
        let adj = self.node_adjacency();
        let m = self.nodes.len();
        let mut level = vec![0usize; m];
        let mut state = vec![0u8; m];
        fn go(k: usize, adj: &[Vec<usize>], level: &mut [usize], state: &mut [u8]) -> usize {
            if state[k] == 2 {
                return level[k];
            }
            debug_assert_ne!(state[k], 1, "cycle in validated dag");
            state[k] = 1;
            // A direct edge to the sink contributes a path of length 1.
            let mut best = 1;
            for &j in &adj[k] {
                best = best.max(1 + go(j, adj, level, state));
            }
            level[k] = best;
            state[k] = 2;
            best
        }
        for k in 0..m {
            go(k, &adj, &mut level, &mut state);
        }
        level
    }

    /// Query count, order, and agent reach.
    pub fn complexity(&self, mode: ComplexityMode) -> Result<ComplexityReport> {
        self.require_valid()?;
        match mode {
            ComplexityMode::Canonical => Ok(self.canonical_complexity()),
            ComplexityMode::Exact => self.exact_complexity(),
        }
    }

    fn canonical_complexity(&self) -> ComplexityReport {
        let m = self.nodes.len();
        let adj = self.node_adjacency();
        let levels = self.levels();
        // Reachable agent sets as bitmasks, including each node's own agent.
        let mut reach = vec![0u32; m];
        let mut done = vec![false; m];
        fn go(k: usize, adj: &[Vec<usize>], agents: &[usize], reach: &mut [u32], done: &mut [bool]) -> u32 {
            if done[k] {
                return reach[k];
            }
            done[k] = true;
            let mut r = 1u32 << (agents[k] - 1);
            for &t in &adj[k] {
                r |= go(t, adj, agents, reach, done);
            }
            reach[k] = r;
            r
        }
        let agents: Vec<usize> = self.nodes.iter().map(|n| n.agent).collect();
        for k in 0..m {
            go(k, &adj, &agents, &mut reach, &mut done);
        }
        ComplexityReport {
            query_c: m,
            order_c: levels.iter().copied().max().unwrap_or(0),
            agent_c: reach.iter().map(|r| r.count_ones() as usize).max().unwrap_or(0),
            exact: false,
        }
    }

    /// Per node, the inclusion-minimal consistent target supports. Slot 0 of
    /// each support mask is the sink, slot `j + 1` is node index `j`.
    fn consistent_supports(&self) -> Result<Vec<Vec<u16>>> {
        let m = self.nodes.len();
        let u = self.universe.len();
        let dense = |form: &LinearForm| -> Vec<f64> {
            let mut v = vec![0.0; u];
            for (mask, c) in form.iter() {
                v[self.universe.position(mask).expect("form key outside universe")] = *c;
            }
            v
        };
        let y_dense = dense(&LinearForm::y_form(&self.universe));
        let values: Vec<Vec<f64>> = self.nodes.iter().map(|n| dense(&n.value)).collect();

        let mut all = Vec::with_capacity(m);
        for (k, node) in self.nodes.iter().enumerate() {
            let i = node.agent;
            let in_i: Vec<bool> = self.universe.iter().map(|s| s.contains(i)).collect();
            // Candidate columns, conditioned on agent i. Slot 0 = sink,
            // slot j + 1 = node j.
            let mut slots: Vec<usize> = vec![0];
            slots.extend((0..m).filter(|&j| j != k).map(|j| j + 1));
            let cols: Vec<Vec<f64>> = slots
                .iter()
                .map(|&slot| {
                    let src = if slot == 0 { &y_dense } else { &values[slot - 1] };
                    src.iter()
                        .zip(&in_i)
                        .map(|(&x, &keep)| if keep { x } else { 0.0 })
                        .collect()
                })
                .collect();
            let target = &values[k];
            let p = cols.len();
            // One Gram matrix per node; subset solves below reuse it, and the
            // least-squares residual comes from it in O(q^2) per subset.
            let mut gram = vec![vec![0.0; p]; p];
            let mut rhs = vec![0.0; p];
            for a in 0..p {
                for b in a..p {
                    let dot: f64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum();
                    gram[a][b] = dot;
                    gram[b][a] = dot;
                }
                rhs[a] = cols[a].iter().zip(target).map(|(x, y)| x * y).sum();
            }
            let t2: f64 = target.iter().map(|x| x * x).sum();
            let res_tol2 = 1e-14 * t2.max(1.0);

            let mut supports: Vec<u16> = Vec::new();
            'subsets: for w in 1u32..1 << p {
                let members: Vec<usize> = (0..p).filter(|&a| w >> a & 1 == 1).collect();
                let q = members.len();
                let mut a = vec![vec![0.0; q]; q];
                let mut b = vec![0.0; q];
                for (x, &ma) in members.iter().enumerate() {
                    for (y, &mb) in members.iter().enumerate() {
                        a[x][y] = gram[ma][mb];
                    }
                    b[x] = rhs[ma];
                }
                let alpha = match solve_dense(&mut a, &mut b) {
                    Ok(v) => v,
                    Err(_) => continue 'subsets,
                };
                // Squared residual ||target - sum alpha col||^2 from the Gram
                // data: t2 - 2 a'r + a'Ga.
                let mut quad = 0.0;
                let mut lin = 0.0;
                for (x, &ma) in members.iter().enumerate() {
                    lin += alpha[x] * rhs[ma];
                    for (y, &mb) in members.iter().enumerate() {
                        quad += alpha[x] * alpha[y] * gram[ma][mb];
                    }
                }
                let res2 = (t2 - 2.0 * lin + quad).max(0.0);
                if res2 > res_tol2 {
                    continue 'subsets;
                }
                let mut support = 0u16;
                for (x, &ma) in members.iter().enumerate() {
                    if alpha[x].abs() > 1e-9 {
                        support |= 1 << slots[ma];
                    }
                }
                if support == 0 {
                    // Zero-valued node; keep a sink edge (weight 0) so the
                    // graph still has a path to Y.
                    support = 1;
                }
                if !supports.contains(&support) {
                    supports.push(support);
                }
            }
            supports.retain_minimal();
            if supports.is_empty() {
                return Err(Error::Solver(format!(
                    "no consistent target set found for node {:?}",
                    node.id
                )));
            }
            supports.sort_unstable();
            all.push(supports);
        }
        Ok(all)
    }

    fn exact_complexity(&self) -> Result<ComplexityReport> {
        let m = self.nodes.len();
        if m > MAX_EXACT_QUERIES {
            return Err(Error::ExactSearchTooLarge { count: m, max: MAX_EXACT_QUERIES });
        }
        let supports = self.consistent_supports()?;

        // Order: minimal levels by rounds. A node enters level r when some
        // support uses only the sink and nodes of level < r. The level of a
        // node in any consistent re-targeting is at least this minimum, and
        // the assignment taking every node's certifying support attains it,
        // so the fixpoint equals the true minimum.
        let mut level = vec![usize::MAX; m];
        for round in 1..=m {
            for k in 0..m {
                if level[k] != usize::MAX {
                    continue;
                }
                let ok = supports[k].iter().any(|&w| {
                    (0..m).all(|j| w >> (j + 1) & 1 == 0 || level[j] < round)
                });
                if ok {
                    level[k] = round;
                }
            }
        }
        if level.contains(&usize::MAX) {
            return Err(Error::Solver("level fixpoint did not converge".into()));
        }
        let order_c = level.iter().copied().max().unwrap_or(0);

        // Agent reach: exhaustive search over one support choice per node,
        // skipping cyclic assignments.
        let mut space: f64 = 1.0;
        for s in &supports {
            space *= s.len() as f64;
        }
        if space > 2_000_000.0 {
            return Err(Error::ExactSearchBudget);
        }
        let agents: Vec<usize> = self.nodes.iter().map(|n| n.agent).collect();
        let mut choice = vec![0usize; m];
        let mut best = usize::MAX;
        search_assignments(0, m, &supports, &mut choice, &agents, &mut best);
        if best == usize::MAX {
            return Err(Error::Solver("no acyclic re-targeting found".into()));
        }

        Ok(ComplexityReport { query_c: m, order_c, agent_c: best, exact: true })
    }

    /// Quadratic score for one node: `1 - (report - sum alpha * target)^2`.
    /// `realizations` maps node ids (and `"Y"`) to realized values.
    pub fn payment(
        &self,
        node_id: &str,
        report: f64,
        realizations: &BTreeMap<String, f64>,
    ) -> Result<f64> {
        let node = self.node(node_id).ok_or_else(|| Error::UnknownNode(node_id.to_string()))?;
        let mut z = 0.0;
        for (target, alpha) in node.targets() {
            let r = realizations
                .get(target.id())
                .ok_or_else(|| Error::MissingRealization(target.id().to_string()))?;
            z += alpha * r;
        }
        let miss = report - z;
        Ok(1.0 - miss * miss)
    }

    /// Truthful realizations of every node plus the sink for one draw.
    pub fn realizations(&self, draw: &SampleDraw) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = self
            .nodes
            .iter()
            .map(|node| (node.id.clone(), draw.evaluate(node.value())))
            .collect();
        out.insert(SINK_ID.to_string(), draw.y());
        out
    }

    /// Monte Carlo check that truth-telling is optimal and that a deviation
    /// of size `delta` costs exactly `delta^2` in expected payment.
    pub fn truthfulness_check(
        &self,
        model: &SignalModel,
        deltas: &[f64],
        samples: u64,
        seed: u64,
    ) -> Result<TruthfulnessReport> {
        self.require_valid()?;
        if model.n() != self.n() {
            return Err(Error::AgentCountMismatch { left: self.n(), right: model.n() });
        }
        if samples < 2 {
            return Err(Error::InvalidArgument("samples must be >= 2".into()));
        }
        if deltas.is_empty() || deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("perturbations must be finite and nonempty".into()));
        }
        let m = self.nodes.len();

        // Edges as (slot, alpha) with slot 0 = sink, j + 1 = node j, so the
        // sampling loop never touches string keys.
        let edges: Vec<Vec<(usize, f64)>> = self
            .nodes
            .iter()
            .map(|node| {
                node.targets
                    .iter()
                    .map(|(t, alpha)| {
                        let slot = match t {
                            TargetRef::Sink => 0,
                            TargetRef::Node(id) => self.index[id] + 1,
                        };
                        (slot, *alpha)
                    })
                    .collect()
            })
            .collect();

        // Residual r - z per node per draw, accumulated chunkwise so the
        // result is independent of thread count.
        const CHUNK: u64 = 4096;
        let chunks = samples.div_ceil(CHUNK);
        let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let lo = chunk * CHUNK;
                let hi = samples.min(lo + CHUNK);
                let mut sum = vec![0.0; m];
                let mut sumsq = vec![0.0; m];
                let mut vals = vec![0.0; m + 1];
                for index in lo..hi {
                    let draw = model.sample_indexed(seed, index);
                    vals[0] = draw.y();
                    for (k, node) in self.nodes.iter().enumerate() {
                        vals[k + 1] = draw.evaluate(node.value());
                    }
                    for k in 0..m {
                        let z: f64 = edges[k].iter().map(|&(s, a)| a * vals[s]).sum();
                        let e = vals[k + 1] - z;
                        sum[k] += e;
                        sumsq[k] += e * e;
                    }
                }
                (sum, sumsq)
            })
            .collect();
        let mut sum = vec![0.0; m];
        let mut sumsq = vec![0.0; m];
        for (s, q) in partials {
            for k in 0..m {
                sum[k] += s[k];
                sumsq[k] += q[k];
            }
        }

        let nf = samples as f64;
        let mut entries = Vec::new();
        for (k, node) in self.nodes.iter().enumerate() {
            let mean = sum[k] / nf;
            let var = (sumsq[k] / nf - mean * mean).max(0.0);
            let se_mean = (var / nf).sqrt();
            for &delta in deltas {
                // Per-draw payment gap: pi(truth) - pi(truth + delta)
                //   = 2*delta*(r - z) + delta^2.
                let gap = 2.0 * delta * mean + delta * delta;
                let stderr = 2.0 * delta.abs() * se_mean;
                let analytic = delta * delta;
                let tol = (3.0 * stderr).max(1e-12);
                entries.push(TruthEntry {
                    node: node.id.clone(),
                    delta,
                    gap_estimate: gap,
                    stderr,
                    analytic,
                    gap_pass: (gap - analytic).abs() <= tol,
                    order_pass: gap >= -tol,
                });
            }
        }
        Ok(TruthfulnessReport { samples, entries })
    }

    pub fn to_json(&self) -> String {
        let file = DagFile {
            n: self.n(),
            nodes: self
                .nodes
                .iter()
                .map(|node| DagNodeFile {
                    id: node.id.clone(),
                    agent: node.agent,
                    targets: node
                        .targets
                        .iter()
                        .map(|(t, alpha)| DagTargetFile { id: t.id().to_string(), alpha: *alpha })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("dag serialization cannot fail")
    }

    /// Loads structure from JSON and re-derives every node value over the
    /// full lattice; stored values are never trusted from a file. The schema
    /// carries no support universe, so this requires `n <= 16`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: DagFile = serde_json::from_str(text)?;
        let universe = Universe::full(file.n)?;
        let mut dag = QueryDag::new(universe);

        // Insert structure first with placeholder values so derivation order
        // does not constrain file order.
        for node in &file.nodes {
            let targets: Vec<(TargetRef, f64)> = node
                .targets
                .iter()
                .map(|t| {
                    let r = if t.id == SINK_ID {
                        TargetRef::Sink
                    } else {
                        TargetRef::Node(t.id.clone())
                    };
                    (r, t.alpha)
                })
                .collect();
            let placeholder = LinearForm::zero(file.n)?;
            dag.add_node(node.id.clone(), node.agent, targets, placeholder)?;
        }
        for node in &dag.nodes {
            for (target, _) in &node.targets {
                if let TargetRef::Node(id) = target {
                    if !dag.index.contains_key(id) {
                        return Err(Error::UnknownNode(id.clone()));
                    }
                }
            }
        }

        // Derive values in dependency order: a node is ready once all its
        // node targets are derived.
        let m = dag.nodes.len();
        let mut derived = vec![false; m];
        let mut remaining = m;
        while remaining > 0 {
            let mut progressed = false;
            for k in 0..m {
                if derived[k] {
                    continue;
                }
                let ready = dag.nodes[k].targets.iter().all(|(t, _)| match t {
                    TargetRef::Sink => true,
                    TargetRef::Node(id) => derived[dag.index[id]],
                });
                if ready {
                    let agent = dag.nodes[k].agent;
                    let targets = dag.nodes[k].targets.clone();
                    dag.nodes[k].value = dag.derived_value(agent, &targets)?;
                    derived[k] = true;
                    remaining -= 1;
                    progressed = true;
                }
            }
            if !progressed {
                let stuck: Vec<&str> = (0..m)
                    .filter(|&k| !derived[k])
                    .map(|k| dag.nodes[k].id.as_str())
                    .collect();
                return Err(Error::InvalidDag(format!(
                    "cyclic dependencies prevent value derivation for nodes: {}",
                    stuck.join(", ")
                )));
            }
        }
        Ok(dag)
    }
}

/// Returns the node indices of one directed cycle, if any.
fn find_cycle(m: usize, adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut state = vec![0u8; m];
    let mut stack = Vec::new();
    fn dfs(k: usize, adj: &[Vec<usize>], state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        state[k] = 1;
        stack.push(k);
        for &j in &adj[k] {
            if state[j] == 1 {
                let start = stack.iter().position(|&x| x == j).unwrap();
                return Some(stack[start..].to_vec());
            }
            if state[j] == 0 {
                if let Some(c) = dfs(j, adj, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[k] = 2;
        None
    }
    for k in 0..m {
        if state[k] == 0 {
            if let Some(c) = dfs(k, adj, &mut state, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

trait RetainMinimal {
    fn retain_minimal(&mut self);
}

impl RetainMinimal for Vec<u16> {
    /// Keeps only inclusion-minimal bitmasks.
    fn retain_minimal(&mut self) {
        let snapshot = self.clone();
        self.retain(|&w| !snapshot.iter().any(|&v| v != w && v & w == v));
    }
}

/// True when assigning node `k` closed a directed cycle. Only nodes `0..=k`
/// have out-edges at this point, so any new cycle passes through `k`; it
/// exists iff `k` is reachable from one of its own targets.
fn closes_cycle(k: usize, m: usize, supports: &[Vec<u16>], choice: &[usize]) -> bool {
    let mut visited = 0u16;
    let mut frontier = vec![k];
    while let Some(x) = frontier.pop() {
        let w = supports[x][choice[x]];
        for j in 0..m {
            if w >> (j + 1) & 1 == 0 {
                continue;
            }
            if j == k {
                return true;
            }
            if j < k && visited >> j & 1 == 0 {
                visited |= 1 << j;
                frontier.push(j);
            }
        }
    }
    false
}

/// Depth-first enumeration of support assignments for the exact agent-reach
/// minimum. Cyclic partial assignments are pruned as soon as they close.
fn search_assignments(
    k: usize,
    m: usize,
    supports: &[Vec<u16>],
    choice: &mut Vec<usize>,
    agents: &[usize],
    best: &mut usize,
) {
    if k == m {
        let mut reach = vec![0u32; m];
        let mut done = vec![false; m];
        fn close(
            k: usize,
            supports: &[Vec<u16>],
            choice: &[usize],
            agents: &[usize],
            reach: &mut [u32],
            done: &mut [bool],
        ) -> u32 {
            if done[k] {
                return reach[k];
            }
            done[k] = true;
            let mut r = 1u32 << (agents[k] - 1);
            let w = supports[k][choice[k]];
            for j in 0..agents.len() {
                if w >> (j + 1) & 1 == 1 {
                    r |= close(j, supports, choice, agents, reach, done);
                }
            }
            reach[k] = r;
            r
        }
        let mut worst = 0usize;
        for j in 0..m {
            let r = close(j, supports, choice, agents, &mut reach, &mut done);
            worst = worst.max(r.count_ones() as usize);
        }
        *best = (*best).min(worst);
        return;
    }
    for opt in 0..supports[k].len() {
        choice[k] = opt;
        if !closes_cycle(k, m, supports, choice) {
            search_assignments(k + 1, m, supports, choice, agents, best);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TruthEntry {
    pub node: String,
    pub delta: f64,
    pub gap_estimate: f64,
    pub stderr: f64,
    /// The exact expected gap for a quadratic score: `delta^2`.
    pub analytic: f64,
    /// Estimate within 3 standard errors of the analytic gap.
    pub gap_pass: bool,
    /// Truthful expected payment at least the perturbed one, minus 3 SE.
    pub order_pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruthfulnessReport {
    pub samples: u64,
    pub entries: Vec<TruthEntry>,
}

impl TruthfulnessReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.gap_pass && e.order_pass)
    }
}

#[derive(Serialize, Deserialize)]
struct DagFile {
    n: usize,
    nodes: Vec<DagNodeFile>,
}

#[derive(Serialize, Deserialize)]
struct DagNodeFile {
    id: String,
    agent: usize,
    targets: Vec<DagTargetFile>,
}

#[derive(Serialize, Deserialize)]
struct DagTargetFile {
    id: String,
    alpha: f64,
}
