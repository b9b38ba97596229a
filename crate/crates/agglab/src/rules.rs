//! Aggregation rules over elicited queries and their exact worst-case error.
//!
//! Three rule shapes. A [`DeterministicRule`] weights the node values of one
//! query DAG; its output is a linear form in the signals, so exact and
//! worst-case error reduce to coefficient inspection. A [`RandomizedRule`]
//! mixes deterministic atoms; the adversary sees the mixture, so its worst
//! case maximizes the probability-weighted squared miss over single subsets.
//! A [`SymmetricRule`] weights intersection queries by subset size only,
//! which collapses its error profile to a polynomial in `|T|` and connects
//! rule design to the minimax machinery.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear_form::LinearForm;
use crate::mask::{SubsetMask, Universe};
use crate::minimax::{PolyConstraint, PolySpec};
use crate::query_dag::{QueryDag, TargetRef};
use crate::query_families::{difference_set, intersection_set, size_class, standard_set};
use crate::signal_model::{self, SignalModel};

/// Binomial coefficient in floating point; exact for the small arguments
/// used here and zero when `k > t`.
fn binomial(t: usize, k: usize) -> f64 {
    if k > t {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (t - j) as f64 / (j + 1) as f64)
}

fn choose_u64(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut acc: u64 = 1;
    for j in 1..=k {
        acc = acc * (n - k + j) as u64 / j as u64;
    }
    acc
}

/// Fixed weights on the nodes of one query DAG: `f = sum_Q beta_Q value(Q)`.
#[derive(Clone, Debug)]
pub struct DeterministicRule {
    dag: QueryDag,
    weights: BTreeMap<String, f64>,
}

impl DeterministicRule {
    /// Every weighted id must name a DAG node; unweighted nodes count as 0.
    pub fn new(dag: QueryDag, weights: BTreeMap<String, f64>) -> Result<Self> {
        for (id, w) in &weights {
            if dag.node(id).is_none() {
                return Err(Error::UnknownNode(id.clone()));
            }
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!("weight for {id} must be finite")));
            }
        }
        Ok(DeterministicRule { dag, weights })
    }

    pub fn dag(&self) -> &QueryDag {
        &self.dag
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.dag.n()
    }

    /// The rule's output as a linear form in the signals.
    pub fn output_form(&self) -> Result<LinearForm> {
        let mut acc = LinearForm::zero(self.dag.n())?;
        for (id, &w) in &self.weights {
            let node = self.dag.node(id).expect("ids validated at construction");
            acc = acc.add(&node.value().scale(w))?;
        }
        Ok(acc)
    }

    /// Normalized mean squared error under one model.
    pub fn error_ratio(&self, model: &SignalModel) -> Result<f64> {
        signal_model::error_ratio(model, &self.output_form()?)
    }

    /// Worst normalized error over all models on the DAG's universe, with a
    /// witness concentrating variance on the argmax subsets.
    pub fn worst_case_error(&self) -> Result<(f64, SignalModel)> {
        signal_model::worst_case_error_form(&self.output_form()?, self.dag.universe())
    }

    pub fn to_json(&self, dag_ref: &str) -> String {
        let file = DeterministicRuleFile {
            dag: dag_ref.to_string(),
            weights: self.weights.clone(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }

    /// `resolve` maps the stored DAG reference (typically a path) to a DAG.
    pub fn from_json(text: &str, resolve: impl FnOnce(&str) -> Result<QueryDag>) -> Result<Self> {
        let file: DeterministicRuleFile = serde_json::from_str(text)?;
        DeterministicRule::new(resolve(&file.dag)?, file.weights)
    }
}

#[derive(Serialize, Deserialize)]
struct DeterministicRuleFile {
    dag: String,
    weights: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct RandomizedRuleFile {
    atoms: Vec<AtomFile>,
}

#[derive(Serialize, Deserialize)]
struct AtomFile {
    p: f64,
    rule: DeterministicRuleFile,
}

/// A probability mixture of deterministic rules: the context is drawn first,
/// then the chosen atom's queries are asked.
#[derive(Clone, Debug)]
pub struct RandomizedRule {
    atoms: Vec<(f64, DeterministicRule)>,
}

impl RandomizedRule {
    /// Probabilities must be positive and sum to 1 within 1e-12; atoms must
    /// agree on the agent count.
    pub fn new(atoms: Vec<(f64, DeterministicRule)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("randomized rule needs at least one atom".into()));
        }
        let n = atoms[0].1.n();
        for (p, rule) in &atoms {
            if !p.is_finite() || *p <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "atom probability {p} must be positive"
                )));
            }
            if rule.n() != n {
                return Err(Error::AgentCountMismatch { left: n, right: rule.n() });
            }
        }
        let sum: f64 = atoms.iter().map(|(p, _)| p).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::BadProbabilities { sum });
        }
        Ok(RandomizedRule { atoms })
    }

    pub fn atoms(&self) -> &[(f64, DeterministicRule)] {
        &self.atoms
    }

    pub fn n(&self) -> usize {
        self.atoms[0].1.n()
    }

    /// Probability-weighted mean of the atom outputs: the determinization of
    /// this rule. Its worst-case error never exceeds the mixture's.
    pub fn mean_form(&self) -> Result<LinearForm> {
        let mut acc = LinearForm::zero(self.n())?;
        for (p, rule) in &self.atoms {
            acc = acc.add(&rule.output_form()?.scale(*p))?;
        }
        Ok(acc)
    }

    /// Expected normalized error under one model: the mixture of the atom
    /// ratios, not the ratio of the mixture.
    pub fn expected_error_ratio(&self, model: &SignalModel) -> Result<f64> {
        let mut acc = 0.0;
        for (p, rule) in &self.atoms {
            acc += p * rule.error_ratio(model)?;
        }
        Ok(acc)
    }

    /// Worst expected normalized error over all models supported on the
    /// first atom's universe. The error ratio is a variance-weighted mean of
    /// per-subset expected squared misses, so the adversary concentrates on
    /// a single argmax subset; scanning every subset is exhaustive.
    pub fn worst_case_error(&self) -> Result<(f64, SignalModel)> {
        let universe = self.atoms[0].1.dag().universe().clone();
        let outputs: Vec<(f64, LinearForm)> = self
            .atoms
            .iter()
            .map(|(p, rule)| Ok((*p, rule.output_form()?)))
            .collect::<Result<_>>()?;
        let mut worst = f64::NEG_INFINITY;
        let mut misses: Vec<(SubsetMask, f64)> = Vec::with_capacity(universe.len());
        for t in universe.iter() {
            let miss: f64 = outputs
                .iter()
                .map(|(p, form)| {
                    let m = 1.0 - form.coeff(t);
                    p * m * m
                })
                .sum();
            worst = worst.max(miss);
            misses.push((*t, miss));
        }
        let witnesses = misses.into_iter().filter(|(_, m)| *m == worst).map(|(t, _)| t);
        let model = SignalModel::unit_variance_on(universe.n(), witnesses)?;
        Ok((worst, model))
    }

    /// `dag_ref` names the DAG reference stored for each atom by index.
    pub fn to_json(&self, dag_ref: impl Fn(usize) -> String) -> String {
        let file = RandomizedRuleFile {
            atoms: self
                .atoms
                .iter()
                .enumerate()
                .map(|(i, (p, rule))| AtomFile {
                    p: *p,
                    rule: DeterministicRuleFile {
                        dag: dag_ref(i),
                        weights: rule.weights.clone(),
                    },
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }

    pub fn from_json(text: &str, mut resolve: impl FnMut(&str) -> Result<QueryDag>) -> Result<Self> {
        let file: RandomizedRuleFile = serde_json::from_str(text)?;
        let atoms = file
            .atoms
            .into_iter()
            .map(|a| Ok((a.p, DeterministicRule::new(resolve(&a.rule.dag)?, a.rule.weights)?)))
            .collect::<Result<Vec<_>>>()?;
        RandomizedRule::new(atoms)
    }
}

/// Intersection-rule weights that depend on the subset only through its
/// size: `betas[k-1]` is the weight on every `inter(S)` with `|S| = k`.
/// The induced coefficient on a signal `X_T` is the polynomial
/// `p(|T|) = sum_k beta_k C(|T|, k)`, which vanishes at 0 by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricRule {
    betas: Vec<f64>,
}

impl SymmetricRule {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidArgument("symmetric rule needs at least size 1".into()));
        }
        if betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("symmetric rule weights must be finite".into()));
        }
        Ok(SymmetricRule { betas })
    }

    /// Largest subset size carrying weight: the rule's query-budget order.
    pub fn d(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// The induced coefficient on any signal indexed by a size-`t` subset.
    pub fn coefficient_for_size(&self, t: usize) -> f64 {
        (1..=self.betas.len()).map(|k| self.betas[k - 1] * binomial(t, k)).sum()
    }

    /// The coefficient profile as a monomial polynomial with `p(0) = 0`,
    /// via the falling-factorial expansion of each binomial.
    pub fn polynomial(&self) -> Result<PolySpec> {
        let d = self.betas.len();
        let mut coeffs = vec![0.0; d + 1];
        let mut basis = vec![1.0]; // C(t, 0)
        for k in 1..=d {
            // C(t, k) = C(t, k-1) * (t - (k-1)) / k
            let mut next = vec![0.0; basis.len() + 1];
            for (i, &c) in basis.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= (k as f64 - 1.0) * c;
            }
            for c in &mut next {
                *c /= k as f64;
            }
            basis = next;
            for (i, &c) in basis.iter().enumerate() {
                coeffs[i] += self.betas[k - 1] * c;
            }
        }
        PolySpec::new(coeffs, PolyConstraint::P0EqZero)
    }

    /// The rule's output as a linear form on the full `n`-agent lattice.
    pub fn output_form(&self, n: usize) -> Result<LinearForm> {
        let universe = Universe::full(n)?;
        LinearForm::from_entries(
            n,
            universe.iter().map(|t| (*t, self.coefficient_for_size(t.size()))),
        )
    }

    /// Worst normalized error over `n`-agent models: `max_t (1 - p(t))^2`
    /// with a unit-variance witness per argmax size class.
    pub fn worst_case_error(&self, n: usize) -> Result<(f64, SignalModel)> {
        signal_model::worst_case_error_by_size(n, |t| self.coefficient_for_size(t))
    }
}

/// Uniform mixture over the `n` single-posterior rules: ask one expert.
pub fn random_expert(n: usize) -> Result<RandomizedRule> {
    let universe = Universe::full(n)?;
    let p = 1.0 / n as f64;
    let atoms = (1..=n)
        .map(|i| {
            let id = format!("Y{i}");
            let mut dag = QueryDag::new(universe.clone());
            dag.add_node_derived(id.clone(), i, vec![(TargetRef::Sink, 1.0)])?;
            Ok((p, DeterministicRule::new(dag, BTreeMap::from([(id, 1.0)]))?))
        })
        .collect::<Result<Vec<_>>>()?;
    RandomizedRule::new(atoms)
}

/// The lattice-inversion rule over the full intersection set: weight
/// `(-1)^(|S|+1)` on `inter(S)`. Telescopes to the target exactly, so its
/// worst-case error is 0.
pub fn optimal_intersection_rule(n: usize) -> Result<DeterministicRule> {
    let universe = Universe::full(n)?;
    let (queries, dag) = intersection_set(&universe, n)?;
    let weights = queries
        .iter()
        .map(|q| {
            let w = if q.s().size() % 2 == 1 { 1.0 } else { -1.0 };
            (q.id(), w)
        })
        .collect();
    DeterministicRule::new(dag, weights)
}

/// Unit weights on the full difference chain `diff(1), diff(1,2), ..`:
/// the prefixes partition the signal index sets, so the sum is the target
/// with `n` queries and zero error.
pub fn optimal_difference_rule(n: usize) -> Result<DeterministicRule> {
    let universe = Universe::full(n)?;
    let agents: Vec<usize> = (1..=n).collect();
    let (queries, dag) = difference_set(&universe, &agents)?;
    let weights = queries.iter().map(|q| (q.id(), 1.0)).collect();
    DeterministicRule::new(dag, weights)
}

/// Uniform mixture over all `C(n, d)` agent subsets of size `d`, each atom
/// the unit-weight difference chain over that subset in ascending agent
/// order. Covers a signal exactly when the subset meets its index set, so
/// the worst-case error is `1 - d/n`, at the singleton adversary.
pub fn randomized_difference_rule(n: usize, d: usize) -> Result<RandomizedRule> {
    if d < 1 || d >= n {
        return Err(Error::BudgetOutOfRange { d, max: n.saturating_sub(1) });
    }
    let universe = Universe::full(n)?;
    let p = 1.0 / choose_u64(n, d) as f64;
    let mut atoms = Vec::new();
    for s in size_class(n, d) {
        let agents: Vec<usize> = s.agents().collect();
        let (queries, dag) = difference_set(&universe, &agents)?;
        let weights = queries.iter().map(|q| (q.id(), 1.0)).collect();
        atoms.push((p, DeterministicRule::new(dag, weights)?));
    }
    RandomizedRule::new(atoms)
}

/// Probability that a uniformly random size-`d` agent subset misses a fixed
/// size-`t` index set entirely: `C(n-t, d) / C(n, d)`. This is the expected
/// squared miss of [`randomized_difference_rule`] on any size-`t` signal.
pub fn miss_probability(n: usize, d: usize, t: usize) -> Result<f64> {
    if d < 1 || d >= n {
        return Err(Error::BudgetOutOfRange { d, max: n.saturating_sub(1) });
    }
    if t < 1 || t > n {
        return Err(Error::InvalidArgument(format!("subset size {t} outside 1..={n}")));
    }
    Ok(choose_u64(n - t, d) as f64 / choose_u64(n, d) as f64)
}

/// Unit variance on each singleton, nothing anywhere else: the adversary
/// that pins the randomized difference rule at its worst case.
pub fn adversarial_singleton_model(n: usize) -> Result<SignalModel> {
    let singles = (1..=n)
        .map(|i| SubsetMask::singleton(n, i))
        .collect::<Result<Vec<_>>>()?;
    SignalModel::unit_variance_on(n, singles)
}

/// Averages intersection weights over each size class: `beta_k` is the mean
/// weight across all `C(n, k)` subsets of size `k` (absent keys count 0,
/// but every size class must appear at least once). Averaging never
/// increases worst-case error.
pub fn symmetrize(
    n: usize,
    d: usize,
    weights: &BTreeMap<SubsetMask, f64>,
) -> Result<SymmetricRule> {
    if d < 1 || d > n {
        return Err(Error::BudgetOutOfRange { d, max: n });
    }
    let mut sums = vec![0.0; d + 1];
    let mut seen = vec![false; d + 1];
    for (s, &w) in weights {
        if s.n() != n {
            return Err(Error::AgentCountMismatch { left: n, right: s.n() });
        }
        let k = s.size();
        if k < 1 || k > d {
            return Err(Error::WeightSizeOutOfRange { subset: s.to_string(), size: k, d });
        }
        if !w.is_finite() {
            return Err(Error::InvalidArgument(format!("weight for {s} must be finite")));
        }
        sums[k] += w;
        seen[k] = true;
    }
    for (k, &present) in seen.iter().enumerate().skip(1) {
        if !present {
            return Err(Error::MissingSizeClass { size: k });
        }
    }
    let betas = (1..=d).map(|k| sums[k] / choose_u64(n, k) as f64).collect();
    SymmetricRule::new(betas)
}

/// Inverts the coefficient profile: finds the size weights whose induced
/// polynomial is `p`. The binomial system is unitriangular, so forward
/// substitution is exact: `beta_t = p(t) - sum_{k<t} beta_k C(t, k)`.
pub fn rule_from_polynomial(p: &PolySpec, d: usize) -> Result<SymmetricRule> {
    if p.constraint() != PolyConstraint::P0EqZero {
        return Err(Error::InvalidArgument(
            "rule polynomial must carry the p(0) = 0 constraint".into(),
        ));
    }
    if d < 1 || p.degree() > d {
        return Err(Error::DegreeOutOfRange { d: p.degree(), max: d });
    }
    let mut betas = vec![0.0; d];
    for t in 1..=d {
        let mut acc = p.eval(t as f64);
        for k in 1..t {
            acc -= betas[k - 1] * binomial(t, k);
        }
        betas[t - 1] = acc;
    }
    SymmetricRule::new(betas)
}

/// The inverse view of [`rule_from_polynomial`]; round-trips exactly.
pub fn polynomial_of_rule(rule: &SymmetricRule) -> Result<PolySpec> {
    rule.polynomial()
}

/// Posterior weights for the common-signal model with per-agent noise
/// variances: `alpha_i = 1 - n ((n-1)/(n+1)) tau_i / tau`, where `tau_i`
/// is the precision `1/variance_i` and `tau` their sum. At equal variances
/// every weight is `2/(n+1)`.
pub fn precision_weighted_rule(variances: &[f64]) -> Result<DeterministicRule> {
    let n = variances.len();
    for (i, &v) in variances.iter().enumerate() {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::NonPositiveVariance { agent: i + 1 });
        }
    }
    let universe = Universe::full(n)?;
    let dag = standard_set(&universe)?;
    let tau: Vec<f64> = variances.iter().map(|v| 1.0 / v).collect();
    let total: f64 = tau.iter().sum();
    let factor = n as f64 * (n as f64 - 1.0) / (n as f64 + 1.0);
    let weights = (1..=n)
        .map(|i| (format!("Y{i}"), 1.0 - factor * tau[i - 1] / total))
        .collect();
    DeterministicRule::new(dag, weights)
}
