//! Structured query families and their canonical eliciting DAGs.
//!
//! Intersection queries `inter(S)` sum the signals shared by every agent of
//! `S`; they arise from conditioning the target on the agents of `S` in any
//! order. Difference queries `diff(L)` capture what the last agent of an
//! ordered list knows beyond the earlier ones. Both come with layered DAGs
//! that elicit them truthfully, and every linear query DAG can be rewritten
//! into intersection coordinates.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linear_form::{LinearForm, COEFF_TOL};
use crate::mask::{SubsetMask, Universe};
use crate::query_dag::{QueryDag, TargetRef};

/// `inter(S)`: the sum of signals indexed by supersets of `s`.
#[derive(Clone, Debug)]
pub struct InterQuery {
    s: SubsetMask,
    value: LinearForm,
}

impl InterQuery {
    /// Builds the closed form directly: coefficient 1 on every universe
    /// member containing `s`.
    pub fn new(universe: &Universe, s: SubsetMask) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::EmptyAgentList);
        }
        if s.n() != universe.n() {
            return Err(Error::AgentCountMismatch { left: universe.n(), right: s.n() });
        }
        let entries = universe.supersets_of(&s).map(|t| (*t, 1.0));
        let value = LinearForm::from_entries(universe.n(), entries)?;
        Ok(InterQuery { s, value })
    }

    pub fn s(&self) -> &SubsetMask {
        &self.s
    }

    pub fn value(&self) -> &LinearForm {
        &self.value
    }

    /// Canonical node id, e.g. `inter(1,3)`.
    pub fn id(&self) -> String {
        inter_id(&self.s)
    }
}

/// `diff(i_1..i_k)`: what agent `i_k` knows that agents `i_1..i_{k-1}` do
/// not. Closed form: coefficient 1 on subsets containing `i_k` and none of
/// the earlier agents.
#[derive(Clone, Debug)]
pub struct DiffQuery {
    prefix: Vec<usize>,
    value: LinearForm,
}

impl DiffQuery {
    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn value(&self) -> &LinearForm {
        &self.value
    }

    /// Canonical node id, e.g. `diff(2,1)`. Order matters.
    pub fn id(&self) -> String {
        diff_id(&self.prefix)
    }
}

pub fn inter_id(s: &SubsetMask) -> String {
    let agents: Vec<String> = s.agents().map(|a| a.to_string()).collect();
    format!("inter({})", agents.join(","))
}

pub fn diff_id(prefix: &[usize]) -> String {
    let agents: Vec<String> = prefix.iter().map(|a| a.to_string()).collect();
    format!("diff({})", agents.join(","))
}

fn check_agents(universe: &Universe, agents: &[usize], distinct: bool) -> Result<()> {
    if agents.is_empty() {
        return Err(Error::EmptyAgentList);
    }
    let n = universe.n();
    let mut seen = 0u32;
    for &a in agents {
        if a < 1 || a > n {
            return Err(Error::AgentOutOfRange { agent: a, n });
        }
        if distinct {
            if seen >> (a - 1) & 1 == 1 {
                return Err(Error::RepeatedAgent { agent: a });
            }
            seen |= 1 << (a - 1);
        }
    }
    Ok(())
}

/// Conditions the target on each agent of `sequence` in order. Only the
/// unordered set matters; the result is checked against the superset closed
/// form and any mismatch is a hard error.
pub fn iter_query(universe: &Universe, sequence: &[usize]) -> Result<InterQuery> {
    check_agents(universe, sequence, false)?;
    let mut form = LinearForm::y_form(universe);
    for &agent in sequence {
        form = form.condition_on_agent(agent)?;
    }
    let s = SubsetMask::from_agents(universe.n(), sequence)?;
    let closed = InterQuery::new(universe, s)?;
    let deviation = form.max_abs_diff(closed.value());
    if deviation > COEFF_TOL {
        return Err(Error::SelfCheck { what: inter_id(&s), deviation });
    }
    Ok(closed)
}

/// Yields all masks over `n` agents with exactly `k` bits, ascending.
pub fn size_class(n: usize, k: usize) -> impl Iterator<Item = SubsetMask> {
    let limit: u32 = 1 << n;
    let mut next: u32 = if k == 0 { 0 } else { (1 << k) - 1 };
    let mut fresh = true;
    std::iter::from_fn(move || {
        if k == 0 || k > n {
            return None;
        }
        if !fresh {
            // Gosper's hack: next larger integer with the same popcount.
            let c = next & next.wrapping_neg();
            let r = next + c;
            next = (((r ^ next) >> 2) / c) | r;
        }
        fresh = false;
        if next >= limit {
            None
        } else {
            Some(SubsetMask::from_bits(n, next).expect("mask within range"))
        }
    })
}

/// All `inter(S)` for `1 <= |S| <= d`, with the layered eliciting DAG:
/// node `inter(S)` is answered by `max(S)` and targets `inter(S - max(S))`,
/// singletons target `Y` directly.
pub fn intersection_set(universe: &Universe, d: usize) -> Result<(Vec<InterQuery>, QueryDag)> {
    let n = universe.n();
    if d < 1 || d > n {
        return Err(Error::BudgetOutOfRange { d, max: n });
    }
    let mut queries = Vec::new();
    let mut dag = QueryDag::new(universe.clone());
    for k in 1..=d {
        for s in size_class(n, k) {
            let agent = s.max_agent().expect("nonempty size class");
            let target = if k == 1 {
                TargetRef::Sink
            } else {
                TargetRef::node(inter_id(&s.without(agent)))
            };
            dag.add_node_derived(inter_id(&s), agent, vec![(target, 1.0)])?;
            let query = InterQuery::new(universe, s)?;
            let deviation = dag
                .node(&query.id())
                .expect("just added")
                .value()
                .max_abs_diff(query.value());
            if deviation > COEFF_TOL {
                return Err(Error::SelfCheck { what: query.id(), deviation });
            }
            queries.push(query);
        }
    }
    Ok((queries, dag))
}

/// Builds `diff(prefix)` by the inductive definition (condition the target
/// minus all earlier difference values on the last agent) and checks it
/// against the set-difference closed form.
pub fn diff_query(universe: &Universe, prefix: &[usize]) -> Result<DiffQuery> {
    check_agents(universe, prefix, true)?;
    let n = universe.n();
    let y = LinearForm::y_form(universe);
    let mut earlier_sum = LinearForm::zero(n)?;
    let mut last = None;
    for (k, &agent) in prefix.iter().enumerate() {
        let inductive = y.sub(&earlier_sum)?.condition_on_agent(agent)?;
        let closed = diff_closed_form(universe, &prefix[..=k])?;
        let deviation = inductive.max_abs_diff(&closed);
        if deviation > COEFF_TOL {
            return Err(Error::SelfCheck { what: diff_id(&prefix[..=k]), deviation });
        }
        earlier_sum = earlier_sum.add(&inductive)?;
        last = Some(inductive);
    }
    Ok(DiffQuery { prefix: prefix.to_vec(), value: last.expect("nonempty prefix") })
}

fn diff_closed_form(universe: &Universe, prefix: &[usize]) -> Result<LinearForm> {
    let (&last, earlier) = prefix.split_last().expect("nonempty prefix");
    let entries = universe
        .iter()
        .filter(|t| t.contains(last) && earlier.iter().all(|&e| !t.contains(e)))
        .map(|t| (*t, 1.0));
    LinearForm::from_entries(universe.n(), entries)
}

/// All prefixes of `agents` as difference queries, with the canonical DAG:
/// each node targets `Y` with weight 1 and every earlier node with weight -1.
pub fn difference_set(universe: &Universe, agents: &[usize]) -> Result<(Vec<DiffQuery>, QueryDag)> {
    check_agents(universe, agents, true)?;
    let mut queries = Vec::new();
    let mut dag = QueryDag::new(universe.clone());
    for k in 0..agents.len() {
        let prefix = &agents[..=k];
        let mut targets = vec![(TargetRef::Sink, 1.0)];
        for earlier in 0..k {
            targets.push((TargetRef::node(diff_id(&agents[..=earlier])), -1.0));
        }
        dag.add_node_derived(diff_id(prefix), agents[k], targets)?;
        let closed = diff_closed_form(universe, prefix)?;
        let node_value = dag.node(&diff_id(prefix)).expect("just added").value();
        let deviation = node_value.max_abs_diff(&closed);
        if deviation > COEFF_TOL {
            return Err(Error::SelfCheck { what: diff_id(prefix), deviation });
        }
        queries.push(DiffQuery { prefix: prefix.to_vec(), value: closed });
    }
    Ok((queries, dag))
}

/// One posterior query per agent, each scored directly against the target.
pub fn standard_set(universe: &Universe) -> Result<QueryDag> {
    let mut dag = QueryDag::new(universe.clone());
    for i in 1..=universe.n() {
        dag.add_node_derived(format!("Y{i}"), i, vec![(TargetRef::Sink, 1.0)])?;
    }
    Ok(dag)
}

/// Posteriors for agents `1..n-1` plus a summary node: agent `n` predicts
/// the sum of everyone else's reports. Low order, maximal agent reach.
pub fn sum_prediction_set(universe: &Universe) -> Result<QueryDag> {
    let n = universe.n();
    if n < 2 {
        return Err(Error::AgentCountOutOfRange { n, max: usize::MAX });
    }
    let mut dag = QueryDag::new(universe.clone());
    for i in 1..n {
        dag.add_node_derived(format!("Y{i}"), i, vec![(TargetRef::Sink, 1.0)])?;
    }
    let targets: Vec<(TargetRef, f64)> =
        (1..n).map(|i| (TargetRef::node(format!("Y{i}")), 1.0)).collect();
    dag.add_node_derived("S", n, targets)?;
    Ok(dag)
}

/// Alternating chain of conditionings between agents `i` and `j`, length
/// `2m`: node `k` conditions node `k-1`'s value on the agent whose turn it
/// is. High order, agent reach 2.
pub fn iterated_chain_set(universe: &Universe, i: usize, j: usize, m: usize) -> Result<QueryDag> {
    check_agents(universe, &[i, j], true)?;
    if m < 1 {
        return Err(Error::InvalidArgument("chain length parameter m must be >= 1".into()));
    }
    let mut dag = QueryDag::new(universe.clone());
    dag.add_node_derived("Q1", i, vec![(TargetRef::Sink, 1.0)])?;
    for k in 2..=2 * m {
        let agent = if k % 2 == 0 { j } else { i };
        dag.add_node_derived(
            format!("Q{k}"),
            agent,
            vec![(TargetRef::node(format!("Q{}", k - 1)), 1.0)],
        )?;
    }
    Ok(dag)
}

/// Rewrites every node value into intersection coordinates: `id` maps to
/// coefficients `c_S` with `value == sum c_S * inter(S)`.
///
/// Conditioning `inter(S)` on agent `i` gives `inter(S + i)` exactly, so a
/// node's expansion is the weighted sum of its targets' expansions with the
/// node's agent adjoined to every key (the target `Y` expands as the empty
/// key). The reconstruction is verified symbolically per node.
pub fn rewrite_to_intersection(
    dag: &QueryDag,
) -> Result<BTreeMap<String, BTreeMap<SubsetMask, f64>>> {
    let report = dag.validate();
    if !report.is_valid() {
        return Err(Error::InvalidDag(report.to_string()));
    }
    let universe = dag.universe();
    let n = universe.n();
    let empty = SubsetMask::empty(n)?;

    let mut expansions: BTreeMap<String, BTreeMap<SubsetMask, f64>> = BTreeMap::new();
    let mut remaining: Vec<&crate::query_dag::QueryNode> = dag.nodes().iter().collect();
    while !remaining.is_empty() {
        let before = remaining.len();
        remaining.retain(|node| {
            let ready = node.targets().iter().all(|(t, _)| match t {
                TargetRef::Sink => true,
                TargetRef::Node(id) => expansions.contains_key(id),
            });
            if !ready {
                return true;
            }
            let mut expansion: BTreeMap<SubsetMask, f64> = BTreeMap::new();
            for (target, alpha) in node.targets() {
                let target_expansion: Vec<(SubsetMask, f64)> = match target {
                    TargetRef::Sink => vec![(empty, 1.0)],
                    TargetRef::Node(id) => {
                        expansions[id].iter().map(|(s, c)| (*s, *c)).collect()
                    }
                };
                for (s, c) in target_expansion {
                    let lifted = s.with(node.agent()).expect("agent validated at insertion");
                    let slot = expansion.entry(lifted).or_insert(0.0);
                    *slot += alpha * c;
                    if *slot == 0.0 {
                        expansion.remove(&lifted);
                    }
                }
            }
            expansions.insert(node.id().to_string(), expansion);
            false
        });
        debug_assert!(remaining.len() < before, "validated dag is acyclic");
    }

    // Symbolic verification: the expansion reproduces the node value.
    for node in dag.nodes() {
        let mut rebuilt = LinearForm::zero(n)?;
        for (s, c) in &expansions[node.id()] {
            let inter = InterQuery::new(universe, *s)?;
            rebuilt = rebuilt.add(&inter.value().scale(*c))?;
        }
        let deviation = rebuilt.max_abs_diff(node.value());
        if deviation > 1e-9 {
            return Err(Error::SelfCheck {
                what: format!("intersection rewrite of {:?}", node.id()),
                deviation,
            });
        }
    }
    Ok(expansions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query_dag::ComplexityMode;

    fn full(n: usize) -> Universe {
        Universe::full(n).unwrap()
    }

    fn binomial(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        let mut r = 1usize;
        for j in 0..k {
            r = r * (n - j) / (j + 1);
        }
        r
    }

    #[test]
    fn iter_query_is_order_invariant() {
        let u = full(4);
        for seq in [
            vec![1usize],
            vec![1, 2],
            vec![2, 1],
            vec![3, 1, 4],
            vec![4, 3, 1],
            vec![1, 3, 4],
            vec![2, 2, 3],
        ] {
            let q = iter_query(&u, &seq).unwrap();
            let s = SubsetMask::from_agents(4, &seq).unwrap();
            assert_eq!(*q.s(), s);
            // Coefficient 1 exactly on supersets of the unordered set.
            for t in u.iter() {
                let want = if t.is_superset_of(&s) { 1.0 } else { 0.0 };
                assert_eq!(q.value().coeff(t), want, "seq {seq:?} at {t}");
            }
        }
        let a = iter_query(&u, &[1, 2]).unwrap();
        let b = iter_query(&u, &[2, 1]).unwrap();
        assert_eq!(a.value().max_abs_diff(b.value()), 0.0);
    }

    #[test]
    fn iter_query_top_set_keeps_only_full_subset() {
        let u = full(3);
        let q = iter_query(&u, &[1, 2, 3]).unwrap();
        assert_eq!(q.value().len(), 1);
        assert_eq!(q.value().coeff(&SubsetMask::full(3).unwrap()), 1.0);
    }

    #[test]
    fn intersection_set_counts_and_complexity() {
        for (n, d) in [(3, 1), (3, 2), (4, 3), (5, 5)] {
            let u = full(n);
            let (queries, dag) = intersection_set(&u, d).unwrap();
            let want: usize = (1..=d).map(|k| binomial(n, k)).sum();
            assert_eq!(queries.len(), want);
            assert_eq!(dag.len(), want);
            assert!(dag.validate().is_valid());
            let c = dag.complexity(ComplexityMode::Canonical).unwrap();
            assert_eq!((c.query_c, c.order_c, c.agent_c), (want, d, d));
        }
        let (all, _) = intersection_set(&full(4), 4).unwrap();
        assert_eq!(all.len(), 15);
        assert!(intersection_set(&full(3), 0).is_err());
        assert!(intersection_set(&full(3), 4).is_err());
    }

    #[test]
    fn intersection_nodes_are_answered_by_max_agent() {
        let (queries, dag) = intersection_set(&full(4), 3).unwrap();
        for q in &queries {
            let node = dag.node(&q.id()).unwrap();
            assert_eq!(node.agent(), q.s().max_agent().unwrap());
        }
    }

    #[test]
    fn diff_query_closed_forms() {
        let u2 = full(2);
        let q = diff_query(&u2, &[1, 2]).unwrap();
        assert_eq!(q.value().len(), 1);
        assert_eq!(q.value().coeff(&SubsetMask::from_agents(2, &[2]).unwrap()), 1.0);

        let u3 = full(3);
        let q = diff_query(&u3, &[2, 3]).unwrap();
        assert_eq!(q.value().len(), 2);
        assert_eq!(q.value().coeff(&SubsetMask::from_agents(3, &[3]).unwrap()), 1.0);
        assert_eq!(q.value().coeff(&SubsetMask::from_agents(3, &[1, 3]).unwrap()), 1.0);

        assert!(matches!(
            diff_query(&u3, &[2, 2]),
            Err(Error::RepeatedAgent { agent: 2 })
        ));
    }

    #[test]
    fn difference_prefixes_cover_union_of_information() {
        // Sum over prefixes == sum of X_T over T meeting the list, for every
        // ordered list of distinct agents.
        for n in 2..=6 {
            let u = full(n);
            let mut stack: Vec<Vec<usize>> = (1..=n).map(|a| vec![a]).collect();
            while let Some(list) = stack.pop() {
                let (queries, _) = difference_set(&u, &list).unwrap();
                let mut total = LinearForm::zero(n).unwrap();
                for q in &queries {
                    total = total.add(q.value()).unwrap();
                }
                for t in u.iter() {
                    let want = if list.iter().any(|&a| t.contains(a)) { 1.0 } else { 0.0 };
                    assert_eq!(total.coeff(t), want, "list {list:?} at {t}");
                }
                if list.len() < n.min(3) {
                    for a in 1..=n {
                        if !list.contains(&a) {
                            let mut next = list.clone();
                            next.push(a);
                            stack.push(next);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn full_difference_set_sums_to_target() {
        for n in 1..=8 {
            let u = full(n);
            let agents: Vec<usize> = (1..=n).collect();
            let (queries, dag) = difference_set(&u, &agents).unwrap();
            assert!(dag.validate().is_valid());
            let mut total = LinearForm::zero(n).unwrap();
            for q in &queries {
                total = total.add(q.value()).unwrap();
            }
            assert_eq!(total.max_abs_diff(&LinearForm::y_form(&u)), 0.0);
        }
    }

    #[test]
    fn difference_set_canonical_complexity() {
        let u = full(4);
        let (_, dag) = difference_set(&u, &[2, 4, 1]).unwrap();
        let c = dag.complexity(ComplexityMode::Canonical).unwrap();
        assert_eq!((c.query_c, c.order_c, c.agent_c), (3, 3, 3));
    }

    #[test]
    fn example_dag_constructors_validate() {
        let u = full(3);
        for dag in [
            standard_set(&u).unwrap(),
            sum_prediction_set(&u).unwrap(),
            iterated_chain_set(&u, 1, 2, 3).unwrap(),
        ] {
            assert!(dag.validate().is_valid());
        }
        let c = standard_set(&u).unwrap().complexity(ComplexityMode::Canonical).unwrap();
        assert_eq!((c.query_c, c.order_c, c.agent_c), (3, 1, 1));
        let c = sum_prediction_set(&u).unwrap().complexity(ComplexityMode::Canonical).unwrap();
        assert_eq!((c.query_c, c.order_c, c.agent_c), (3, 2, 3));
        let c = iterated_chain_set(&u, 1, 2, 4)
            .unwrap()
            .complexity(ComplexityMode::Canonical)
            .unwrap();
        assert_eq!((c.query_c, c.order_c, c.agent_c), (8, 8, 2));
    }

    #[test]
    fn rewrite_matches_hand_expansion() {
        // Two posteriors plus a third-agent combination with weights -1, 2.
        let u = full(3);
        let mut dag = QueryDag::new(u.clone());
        dag.add_node_derived("Q1", 1, vec![(TargetRef::Sink, 1.0)]).unwrap();
        dag.add_node_derived("Q2", 2, vec![(TargetRef::Sink, 1.0)]).unwrap();
        dag.add_node_derived(
            "Q3",
            3,
            vec![(TargetRef::node("Q1"), -1.0), (TargetRef::node("Q2"), 2.0)],
        )
        .unwrap();
        let rw = rewrite_to_intersection(&dag).unwrap();

        let single = &rw["Q1"];
        assert_eq!(single.len(), 1);
        assert_eq!(single[&SubsetMask::from_agents(3, &[1]).unwrap()], 1.0);

        let third = &rw["Q3"];
        assert_eq!(third.len(), 2);
        assert_eq!(third[&SubsetMask::from_agents(3, &[1, 3]).unwrap()], -1.0);
        assert_eq!(third[&SubsetMask::from_agents(3, &[2, 3]).unwrap()], 2.0);
    }

    #[test]
    fn rewrite_collapses_alternating_chain() {
        let u = full(4);
        let dag = iterated_chain_set(&u, 1, 2, 3).unwrap();
        let rw = rewrite_to_intersection(&dag).unwrap();
        let last = &rw["Q6"];
        assert_eq!(last.len(), 1);
        assert_eq!(last[&SubsetMask::from_agents(4, &[1, 2]).unwrap()], 1.0);
        // Every chain node from Q2 on stabilizes at the same single key.
        for k in 2..=6 {
            assert_eq!(rw[&format!("Q{k}")].len(), 1, "Q{k}");
        }
    }

    #[test]
    fn rewrite_keys_respect_canonical_order() {
        // On the difference chain, node k expands with keys of size <= k.
        let u = full(5);
        let (queries, dag) = difference_set(&u, &[1, 2, 3, 4, 5]).unwrap();
        let rw = rewrite_to_intersection(&dag).unwrap();
        for (k, q) in queries.iter().enumerate() {
            for s in rw[&q.id()].keys() {
                assert!(s.size() <= k + 1, "{} has key {s}", q.id());
            }
        }
    }

    #[test]
    fn rewrite_rejects_invalid_dag() {
        let mut dag = QueryDag::new(full(2));
        let zero = LinearForm::zero(2).unwrap();
        dag.add_node("a", 1, vec![(TargetRef::node("b"), 1.0)], zero.clone()).unwrap();
        dag.add_node("b", 2, vec![(TargetRef::node("a"), 1.0)], zero).unwrap();
        assert!(matches!(rewrite_to_intersection(&dag), Err(Error::InvalidDag(_))));
    }
}
