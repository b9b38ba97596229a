//! Experiment drivers behind the `agglab` CLI.
//!
//! Each `run_*` function produces plain data rows; the `render_*` helpers
//! turn them into CSV or JSON. For a fixed configuration the rendered bytes
//! are identical across runs and thread counts: all Monte Carlo work is keyed
//! by `(seed, index)`, rows are sorted by `(n, d)`, and floats print in
//! shortest round-trip form.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear_form::LinearForm;
use crate::mask::{SubsetMask, Universe, MAX_AGENTS, MAX_FULL_UNIVERSE};
use crate::minimax::{
    bounds, chebyshev_t, closed_form_value, discrete_minimax, regime, rule_error_equivalence,
    transformed_chebyshev, Domain, MinimaxResult, PolyConstraint, PolySpec, Regime, MAX_DEGREE,
    MAX_GRID_N,
};
use crate::query_dag::{ComplexityMode, QueryDag, TargetRef};
use crate::query_families::{
    diff_query, difference_set, intersection_set, iter_query, iterated_chain_set, standard_set,
    sum_prediction_set, rewrite_to_intersection,
};
use crate::rng::stream_rng;
use crate::rules::{
    adversarial_singleton_model, optimal_difference_rule, optimal_intersection_rule,
    polynomial_of_rule, precision_weighted_rule, random_expert, randomized_difference_rule,
    rule_from_polynomial, symmetrize, DeterministicRule, RandomizedRule, SymmetricRule,
};
use crate::signal_model::{
    common_signal_model, error_ratio, exact_mse, mc_error_estimate, worst_case_error_form,
    SignalModel,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Shared run plumbing: which points to visit, how hard to sample, where the
/// rendered output goes. `d_values: None` means the per-`n` default sweep.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub n_values: Vec<usize>,
    pub d_values: Option<Vec<usize>>,
    pub samples: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::InvalidArgument("at least one n value required".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Error::GridOutOfRange { n, min: 2, max: usize::MAX });
        }
        if let Some(ds) = &self.d_values {
            if ds.is_empty() {
                return Err(Error::InvalidArgument("at least one d value required".into()));
            }
            if let Some(&d) = ds.iter().find(|&&d| d < 1) {
                return Err(Error::DegreeOutOfRange { d, max: MAX_DEGREE });
            }
        }
        if self.samples < 1 {
            return Err(Error::InvalidArgument("samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// Default curve sweep when no explicit grid is given.
pub const DEFAULT_CURVE_N: [usize; 4] = [100, 400, 1600, 6400];

/// Budgets `1..=ceil(2 sqrt n)`: spans both sides of the critical scale.
pub fn default_curve_degrees(n: usize) -> Vec<usize> {
    let cap = (2.0 * (n as f64).sqrt()).ceil() as usize;
    (1..=cap.max(1)).collect()
}

/// One point of the error-vs-budget frontier. All error columns are squared
/// worst-case errors, so `error_lower <= discrete_optimum <= error_upper`
/// whenever the middle column is present. The Monte Carlo columns are filled
/// only where the grid solve ran and the witness model fits `n <= 24`.
#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub d: usize,
    pub error_lower: f64,
    pub error_upper: f64,
    pub discrete_optimum: Option<f64>,
    pub mc_estimate: Option<f64>,
    pub mc_stderr: Option<f64>,
}

pub const CURVE_CSV_HEADER: &str =
    "n,d,error_lower,error_upper,discrete_optimum,mc_estimate,mc_stderr";

/// One row of the query-budget table: the analytic worst case `1 - d/n`, the
/// randomized difference rule's exact worst case, and a mixture Monte Carlo
/// estimate on the singleton adversary.
#[derive(Clone, Debug, Serialize)]
pub struct BudgetPoint {
    pub n: usize,
    pub d: usize,
    pub analytic: f64,
    pub exact: f64,
    pub mc_estimate: Option<f64>,
    pub mc_stderr: Option<f64>,
}

pub const BUDGET_CSV_HEADER: &str = "n,d,analytic,exact,mc_estimate,mc_stderr";

/// End-to-end report for the shared-signal walkthrough: elicit the `n`
/// posteriors plus one cross-prediction, reconstruct the target exactly, and
/// compare against the best fixed-weight linear rule.
#[derive(Clone, Debug, Serialize)]
pub struct CommonSignalReport {
    pub n: usize,
    pub samples: u64,
    pub query_count: usize,
    pub order_depth: usize,
    pub agent_reach: usize,
    /// Exact worst-case error of the reconstruction: 0.
    pub reconstruction_worst: f64,
    pub mc_mse: f64,
    pub mc_stderr: f64,
    /// Largest `|A - Y|` seen over all draws.
    pub max_residual: f64,
    /// Worst case of the weight-`2/(n+1)` rule over all models: matches the
    /// squared budget-1 closed form.
    pub fixed_rule_worst: f64,
    pub d1_closed_form_squared: f64,
    /// Exact errors on an unequal-variance instance: precision weighting
    /// never loses to fixed weights.
    pub uneven_fixed_mse: f64,
    pub uneven_precision_mse: f64,
}

pub const COMMON_SIGNAL_CSV_HEADER: &str = "n,samples,query_count,order_depth,agent_reach,\
reconstruction_worst,mc_mse,mc_stderr,max_residual,fixed_rule_worst,d1_closed_form_squared,\
uneven_fixed_mse,uneven_precision_mse";

/// Grid minimax solve plus bounds and the alternation certificate, shaped for
/// machine consumption.
#[derive(Clone, Debug, Serialize)]
pub struct MinimaxRow {
    pub n: usize,
    pub d: usize,
    pub value: f64,
    pub value_squared: f64,
    pub lower: f64,
    pub upper: f64,
    pub certificate: Vec<(i64, i8)>,
    pub poly: Vec<f64>,
}

pub const MINIMAX_CSV_HEADER: &str = "n,d,value,value_squared,lower,upper";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifySuite {
    Constructions,
    Minimax,
    Incentives,
    All,
}

impl VerifySuite {
    pub fn name(self) -> &'static str {
        match self {
            VerifySuite::Constructions => "constructions",
            VerifySuite::Minimax => "minimax",
            VerifySuite::Incentives => "incentives",
            VerifySuite::All => "all",
        }
    }

    fn includes(self, tag: Tag) -> bool {
        match self {
            VerifySuite::All => true,
            VerifySuite::Constructions => tag == Tag::Constructions,
            VerifySuite::Minimax => tag == Tag::Minimax,
            VerifySuite::Incentives => tag == Tag::Incentives,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckOutcome>,
    /// Operations the run failed to exercise; populated (and required empty)
    /// only for the `all` suite.
    pub ops_missing: Vec<String>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0 && self.ops_missing.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Runners

/// Builds the shared-signal instance (unit private signal per agent plus one
/// signal everyone observes), elicits the `n` posteriors and one extra
/// cross-prediction `Q`, and reconstructs the target exactly:
/// `A = sum Y_i - (n-1) Q`.
pub fn run_common_signal(n: usize, samples: u64, seed: u64) -> Result<CommonSignalReport> {
    if !(2..=MAX_FULL_UNIVERSE).contains(&n) {
        return Err(Error::AgentCountOutOfRange { n, max: MAX_FULL_UNIVERSE });
    }
    if samples < 1 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let model = common_signal_model(&vec![1.0; n], 1.0)?;
    let universe = model.universe()?;

    let mut dag = QueryDag::new(universe);
    for i in 1..=n {
        dag.add_node_derived(format!("Y{i}"), i, vec![(TargetRef::Sink, 1.0)])?;
    }
    // Agent 2's prediction of agent 1's report isolates the common signal.
    dag.add_node_derived("Q", 2, vec![(TargetRef::node("Y1"), 1.0)])?;
    let complexity = dag.complexity(ComplexityMode::Canonical)?;

    let mut weights: std::collections::BTreeMap<String, f64> =
        (1..=n).map(|i| (format!("Y{i}"), 1.0)).collect();
    weights.insert("Q".into(), 1.0 - n as f64);
    let rule = DeterministicRule::new(dag, weights)?;
    let (reconstruction_worst, _) = rule.worst_case_error()?;
    let form = rule.output_form()?;
    let (mc_mse, mc_stderr) = mc_error_estimate(&model, &form, samples, seed)?;
    let max_residual = max_abs_residual(&model, &form, samples, seed);

    let fixed = SymmetricRule::new(vec![2.0 / (n as f64 + 1.0)])?;
    let (fixed_rule_worst, _) = fixed.worst_case_error(n)?;
    let d1 = closed_form_value(n, 1)?;

    // Unequal variances: agent i's private signal has variance i.
    let uneven_vars: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let uneven = common_signal_model(&uneven_vars, 1.0)?;
    let uneven_fixed_mse = error_ratio(&uneven, &support_restricted_form(&fixed, &uneven)?)?;
    let precision = precision_weighted_rule(&uneven_vars)?;
    let uneven_precision_mse = precision.error_ratio(&uneven)?;

    Ok(CommonSignalReport {
        n,
        samples,
        query_count: complexity.query_c,
        order_depth: complexity.order_c,
        agent_reach: complexity.agent_c,
        reconstruction_worst,
        mc_mse,
        mc_stderr,
        max_residual,
        fixed_rule_worst,
        d1_closed_form_squared: d1 * d1,
        uneven_fixed_mse,
        uneven_precision_mse,
    })
}

/// Sweeps `(n, d)` and emits the squared-error frontier: closed-form sandwich
/// bounds everywhere, the exact grid optimum where it is tractable
/// (`n <= 2000`, `d <= 30`, `d < n`), and a Monte Carlo check of the induced
/// symmetric rule where the witness model fits. Any emitted point violating
/// the sandwich aborts the run.
pub fn run_curves(config: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    let mut tasks: Vec<(usize, usize)> = Vec::new();
    for &n in &config.n_values {
        let ds = match &config.d_values {
            Some(ds) => ds.clone(),
            None => default_curve_degrees(n),
        };
        for d in ds {
            tasks.push((n, d));
        }
    }
    let mut points = tasks
        .par_iter()
        .map(|&(n, d)| curve_point(n, d, config.samples, config.seed))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by_key(|p| (p.n, p.d));
    Ok(points)
}

fn curve_point(n: usize, d: usize, samples: u64, seed: u64) -> Result<CurvePoint> {
    let (error_lower, error_upper) = bounds(n, d)?;
    let mut discrete_optimum = None;
    let mut mc_estimate = None;
    let mut mc_stderr = None;
    if n <= MAX_GRID_N && d <= MAX_DEGREE && d < n {
        let result = discrete_minimax(n, d)?;
        let squared = result.value * result.value;
        let deviation = (error_lower - squared).max(squared - error_upper);
        if deviation > 1e-9 {
            return Err(Error::SelfCheck {
                what: format!("sandwich bounds at n={n} d={d}"),
                deviation,
            });
        }
        discrete_optimum = Some(squared);
        if n <= MAX_AGENTS {
            let rule = complement_rule(&result)?;
            let (_, witness) = rule.worst_case_error(n)?;
            let approx = support_restricted_form(&rule, &witness)?;
            let (mean, se) = mc_error_estimate(&witness, &approx, samples, row_seed(seed, n, d))?;
            mc_estimate = Some(mean);
            mc_stderr = Some(se);
        }
    }
    Ok(CurvePoint { n, d, error_lower, error_upper, discrete_optimum, mc_estimate, mc_stderr })
}

/// Per budget `d`: the analytic worst case `1 - d/n`, the randomized
/// difference rule's exact worst case over every model, and a Monte Carlo
/// estimate that samples the mixture itself on the singleton adversary.
pub fn run_query_budget(
    n: usize,
    d_values: &[usize],
    samples: u64,
    seed: u64,
) -> Result<Vec<BudgetPoint>> {
    if !(2..=MAX_FULL_UNIVERSE).contains(&n) {
        return Err(Error::AgentCountOutOfRange { n, max: MAX_FULL_UNIVERSE });
    }
    if d_values.is_empty() {
        return Err(Error::InvalidArgument("at least one d value required".into()));
    }
    if samples < 1 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let model = adversarial_singleton_model(n)?;
    let mut rows = Vec::new();
    for &d in d_values {
        let analytic = 1.0 - d as f64 / n as f64;
        let rule = randomized_difference_rule(n, d)?;
        let (exact, _) = rule.worst_case_error()?;
        let (mean, se) = mixture_mc(&rule, &model, samples, row_seed(seed, n, d))?;
        rows.push(BudgetPoint {
            n,
            d,
            analytic,
            exact,
            mc_estimate: Some(mean),
            mc_stderr: Some(se),
        });
    }
    rows.sort_by_key(|r| (r.n, r.d));
    Ok(rows)
}

/// Solves the grid problem at `(n, d)` and packages value, bounds,
/// alternation certificate, and the optimal polynomial's monomial
/// coefficients.
pub fn run_minimax(n: usize, d: usize) -> Result<MinimaxRow> {
    let result = discrete_minimax(n, d)?;
    let (lower, upper) = bounds(n, d)?;
    let certificate = result
        .alternation
        .iter()
        .map(|&(t, s)| (t as i64, s))
        .collect();
    Ok(MinimaxRow {
        n,
        d,
        value: result.value,
        value_squared: result.value * result.value,
        lower,
        upper,
        certificate,
        poly: result.poly.coeffs().to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo helpers

fn row_seed(seed: u64, n: usize, d: usize) -> u64 {
    seed ^ ((n as u64) << 32) ^ ((d as u64) << 8)
}

/// A rule's output restricted to a model's support. Exact for evaluation on
/// that model: coefficients off the support multiply zero-variance signals.
fn support_restricted_form(rule: &SymmetricRule, model: &SignalModel) -> Result<LinearForm> {
    LinearForm::from_entries(
        model.n(),
        model.support().map(|t| (*t, rule.coefficient_for_size(t.size()))),
    )
}

/// The size-symmetric rule induced by an optimal polynomial: coefficient
/// profile `1 - p(t)`, so its miss on a size-`t` class is `p(t)` and its
/// worst-case error is the squared optimum.
fn complement_rule(result: &MinimaxResult) -> Result<SymmetricRule> {
    let mut coeffs: Vec<f64> = result.poly.coeffs().iter().map(|c| -c).collect();
    coeffs[0] = 0.0;
    let q = PolySpec::new(coeffs, PolyConstraint::P0EqZero)?;
    rule_from_polynomial(&q, result.d)
}

/// Largest `|A - Y|` over `samples` indexed draws.
fn max_abs_residual(model: &SignalModel, form: &LinearForm, samples: u64, seed: u64) -> f64 {
    const CHUNK: u64 = 8192;
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = samples.min(lo + CHUNK);
            let mut worst = 0.0f64;
            for index in lo..hi {
                let draw = model.sample_indexed(seed, index);
                worst = worst.max((draw.evaluate(form) - draw.y()).abs());
            }
            worst
        })
        .collect();
    partials.into_iter().fold(0.0, f64::max)
}

const ATOM_SALT: u64 = 0x7f4a_7c15_9e37_79b9;

/// Monte Carlo error of a randomized rule, sampling the mixture per draw: the
/// atom choice comes from a stream keyed off the same index as the model
/// draw, so the estimate is deterministic at any thread count. Atom outputs
/// are pre-restricted to the model support.
fn mixture_mc(
    rule: &RandomizedRule,
    model: &SignalModel,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if rule.n() != model.n() {
        return Err(Error::AgentCountMismatch { left: rule.n(), right: model.n() });
    }
    let total = model.total_variance();
    let support: Vec<SubsetMask> = model.support().copied().collect();
    let mut cum = Vec::with_capacity(rule.atoms().len());
    let mut acc = 0.0;
    let mut atom_coeffs: Vec<Vec<f64>> = Vec::with_capacity(rule.atoms().len());
    for (p, atom) in rule.atoms() {
        acc += p;
        cum.push(acc);
        let form = atom.output_form()?;
        atom_coeffs.push(support.iter().map(|t| form.coeff(t)).collect());
    }
    const CHUNK: u64 = 8192;
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = samples.min(lo + CHUNK);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for index in lo..hi {
                let u: f64 = stream_rng(seed ^ ATOM_SALT, index).random();
                let a = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
                let draw = model.sample_indexed(seed, index);
                let est: f64 = support
                    .iter()
                    .zip(&atom_coeffs[a])
                    .map(|(t, c)| c * draw.realization(t))
                    .sum();
                let e = est - draw.y();
                let r = e * e / total;
                sum += r;
                sumsq += r * r;
            }
            (sum, sumsq)
        })
        .collect();
    let (sum, sumsq) = partials.into_iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let m = samples as f64;
    let mean = sum / m;
    let var = (sumsq / m - mean * mean).max(0.0);
    Ok((mean, (var / m).sqrt()))
}

// ---------------------------------------------------------------------------
// Verify suites

/// Every named public operation; the `all` suite must exercise each at least
/// once, tracked through the per-check coverage lists below.
pub const OPERATIONS: [&str; 34] = [
    "condition_on_agent",
    "posterior_expectation",
    "exact_mse",
    "error_ratio",
    "worst_case_error",
    "sample",
    "validate",
    "complexity",
    "payment",
    "truthfulness_check",
    "iter_query",
    "intersection_set",
    "diff_query",
    "difference_set",
    "rewrite_to_intersection",
    "random_expert",
    "optimal_intersection_rule",
    "optimal_difference_rule",
    "randomized_difference_rule",
    "adversarial_singleton_model",
    "symmetrize",
    "rule_from_polynomial",
    "precision_weighted_rule",
    "chebyshev_t",
    "transformed_chebyshev",
    "closed_form_value",
    "discrete_minimax",
    "bounds",
    "regime",
    "rule_error_equivalence",
    "cmd_common_signal",
    "cmd_curves",
    "cmd_query_budget",
    "cmd_verify",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tag {
    Constructions,
    Minimax,
    Incentives,
    CmdOnly,
}

struct VerifyCtx {
    samples: u64,
    seed: u64,
}

struct Check {
    name: &'static str,
    tag: Tag,
    ops: &'static [&'static str],
    run: fn(&VerifyCtx) -> Result<String>,
}

fn fail(msg: String) -> Error {
    Error::InvalidArgument(msg)
}

fn check_posterior_identity(ctx: &VerifyCtx) -> Result<String> {
    let n = 4;
    let universe = Universe::full(n)?;
    let model = SignalModel::unit_variance_on(n, universe.iter().copied())?;
    let y = LinearForm::y_form(&universe);
    for i in 1..=n {
        let posterior = model.posterior_expectation(i)?;
        let conditioned = y.condition_on_agent(i)?;
        let gap = posterior.max_abs_diff(&conditioned);
        if gap > 1e-12 {
            return Err(fail(format!("agent {i} posterior deviates by {gap:e}")));
        }
    }
    let draw = model.sample(ctx.seed);
    let direct: f64 = draw.realizations().values().sum();
    if (draw.y() - direct).abs() > 1e-12 || (draw.evaluate(&y) - draw.y()).abs() > 1e-12 {
        return Err(fail("draw target inconsistent with realizations".into()));
    }
    Ok(format!("{n} posteriors match conditioned target form; draws consistent"))
}

fn check_error_accounting(_ctx: &VerifyCtx) -> Result<String> {
    let n = 4;
    let universe = Universe::full(n)?;
    let model = SignalModel::unit_variance_on(n, universe.iter().copied())?;
    let approx = model.posterior_expectation(1)?;
    let mse = exact_mse(&model, &approx)?;
    let ratio = error_ratio(&model, &approx)?;
    // 7 of the 15 unit-variance subsets exclude agent 1.
    if (mse - 7.0).abs() > 1e-12 || (ratio - 7.0 / 15.0).abs() > 1e-12 {
        return Err(fail(format!("single posterior mse={mse} ratio={ratio}")));
    }
    let (worst, witness) = worst_case_error_form(&approx, &universe)?;
    let attained = error_ratio(&witness, &approx)?;
    if (worst - 1.0).abs() > 1e-12 || (attained - worst).abs() > 1e-12 {
        return Err(fail(format!("worst case {worst} not attained ({attained})")));
    }
    Ok("posterior error accounting exact; worst case attained by witness".into())
}

fn check_intersection_family(_ctx: &VerifyCtx) -> Result<String> {
    let n = 5;
    let universe = Universe::full(n)?;
    let (queries, dag) = intersection_set(&universe, 2)?;
    if !dag.validate().is_valid() {
        return Err(fail("intersection set dag failed validation".into()));
    }
    if queries.len() != 15 {
        return Err(fail(format!("expected 15 queries at depth 2, got {}", queries.len())));
    }
    let direct = iter_query(&universe, &[2, 4])?;
    let listed = queries
        .iter()
        .find(|q| q.s() == direct.s())
        .ok_or_else(|| fail("query for {2,4} missing from set".into()))?;
    if direct.value().max_abs_diff(listed.value()) > 1e-12 {
        return Err(fail("iterated conditioning disagrees with set construction".into()));
    }
    let rule = optimal_intersection_rule(n)?;
    let y = LinearForm::y_form(rule.dag().universe());
    let gap = rule.output_form()?.max_abs_diff(&y);
    let (worst, _) = rule.worst_case_error()?;
    if gap > 1e-12 || worst != 0.0 {
        return Err(fail(format!("lattice inversion imperfect: gap={gap:e} worst={worst}")));
    }
    Ok(format!("depth-2 set on {n} agents consistent; full inversion recovers target"))
}

fn check_difference_family(_ctx: &VerifyCtx) -> Result<String> {
    let n = 5;
    let universe = Universe::full(n)?;
    let agents: Vec<usize> = (1..=n).collect();
    let (queries, dag) = difference_set(&universe, &agents)?;
    if !dag.validate().is_valid() {
        return Err(fail("difference set dag failed validation".into()));
    }
    let mut telescoped = LinearForm::zero(n)?;
    for (k, q) in queries.iter().enumerate() {
        let direct = diff_query(&universe, &agents[..=k])?;
        if direct.value().max_abs_diff(q.value()) > 1e-12 {
            return Err(fail(format!("prefix {:?} value mismatch", &agents[..=k])));
        }
        telescoped = telescoped.add(q.value())?;
    }
    let y = LinearForm::y_form(&universe);
    if telescoped.max_abs_diff(&y) > 1e-12 {
        return Err(fail("difference chain does not telescope to target".into()));
    }
    let rule = optimal_difference_rule(n)?;
    let gap = rule.output_form()?.max_abs_diff(&y);
    if gap > 1e-12 {
        return Err(fail(format!("difference rule output gap {gap:e}")));
    }
    Ok(format!("{n}-agent difference chain telescopes exactly with {n} queries"))
}

fn check_rewrite_chain(ctx: &VerifyCtx) -> Result<String> {
    let universe = Universe::full(3)?;
    let chain = iterated_chain_set(&universe, 1, 2, 2)?;
    let expansions = rewrite_to_intersection(&chain)?;
    // Q1 = inter{1}; every later hop alternates within {1,2}, so Q2.. all
    // collapse to inter{1,2}.
    let q1 = &expansions["Q1"];
    let pair = SubsetMask::from_agents(3, &[1, 2])?;
    let single = SubsetMask::singleton(3, 1)?;
    if q1.len() != 1 || (q1.get(&single).copied().unwrap_or(0.0) - 1.0).abs() > 1e-12 {
        return Err(fail(format!("Q1 expansion unexpected: {q1:?}")));
    }
    for id in ["Q2", "Q3", "Q4"] {
        let e = &expansions[id];
        if e.len() != 1 || (e.get(&pair).copied().unwrap_or(0.0) - 1.0).abs() > 1e-12 {
            return Err(fail(format!("{id} expansion unexpected: {e:?}")));
        }
    }
    let mut rng = stream_rng(ctx.seed, 91);
    let u4 = Universe::full(4)?;
    for k in 0..5 {
        let dag = crate::testing::random_linear_dag(&u4, 6, &mut rng)?;
        // The rewrite verifies its own reconstruction; reaching here means
        // every node value was reproduced from intersection coordinates.
        let expansions = rewrite_to_intersection(&dag)?;
        if expansions.len() != dag.len() {
            return Err(fail(format!("random dag {k}: {} expansions", expansions.len())));
        }
    }
    Ok("chain rewrites collapse as expected; 5 random dags rewrite losslessly".into())
}

fn check_mutation_detected(_ctx: &VerifyCtx) -> Result<String> {
    let clean = optimal_intersection_rule(4)?;
    let mut weights = clean.weights().clone();
    let (flip_id, w) = weights.iter().next_back().map(|(k, v)| (k.clone(), *v)).expect("weights");
    weights.insert(flip_id.clone(), -w);
    let corrupted = DeterministicRule::new(clean.dag().clone(), weights)?;
    let y = LinearForm::y_form(corrupted.dag().universe());
    let gap = corrupted.output_form()?.max_abs_diff(&y);
    let (worst, _) = corrupted.worst_case_error()?;
    if gap < 1e-9 || worst < 1e-9 {
        return Err(fail(format!(
            "sign flip at {flip_id} went undetected: gap={gap:e} worst={worst:e}"
        )));
    }
    Ok(format!("sign flip at {flip_id} detected: output gap {gap:.3}, worst case {worst:.3}"))
}

fn check_randomized_rules(_ctx: &VerifyCtx) -> Result<String> {
    let (n, d) = (6, 3);
    let rule = randomized_difference_rule(n, d)?;
    let (worst, witness) = rule.worst_case_error()?;
    let want = 1.0 - d as f64 / n as f64;
    if (worst - want).abs() > 1e-12 {
        return Err(fail(format!("difference mixture worst {worst}, want {want}")));
    }
    let adversary = adversarial_singleton_model(n)?;
    let on_adversary = rule.expected_error_ratio(&adversary)?;
    if (on_adversary - want).abs() > 1e-12 {
        return Err(fail(format!("singleton adversary yields {on_adversary}, want {want}")));
    }
    if witness.support().count() == 0 {
        return Err(fail("missing witness model".into()));
    }
    let expert = random_expert(n)?;
    let (expert_worst, _) = expert.worst_case_error()?;
    let expert_want = 1.0 - 1.0 / n as f64;
    if (expert_worst - expert_want).abs() > 1e-12 {
        return Err(fail(format!("single expert worst {expert_worst}, want {expert_want}")));
    }
    Ok(format!("budget-{d} mixture worst {worst} with singleton witness; expert baseline holds"))
}

fn check_symmetric_rules(_ctx: &VerifyCtx) -> Result<String> {
    let n = 4;
    let clean = optimal_intersection_rule(n)?;
    // Keys of the intersection rule are query ids; rebuild subset keys from
    // the query family to feed the averager.
    let universe = Universe::full(n)?;
    let (queries, _) = intersection_set(&universe, n)?;
    let weights: std::collections::BTreeMap<SubsetMask, f64> = queries
        .iter()
        .map(|q| (*q.s(), clean.weights()[&q.id()]))
        .collect();
    let symmetric = symmetrize(n, n, &weights)?;
    for t in 1..=n {
        let c = symmetric.coefficient_for_size(t);
        if (c - 1.0).abs() > 1e-12 {
            return Err(fail(format!("averaged inversion coefficient at size {t}: {c}")));
        }
    }
    let rule = SymmetricRule::new(vec![0.9, 0.05])?;
    let round = rule_from_polynomial(&polynomial_of_rule(&rule)?, rule.d())?;
    let drift = rule
        .betas()
        .iter()
        .zip(round.betas())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if drift > 1e-9 {
        return Err(fail(format!("polynomial round trip drifts by {drift:e}")));
    }
    let precision = precision_weighted_rule(&[1.0, 1.0, 1.0])?;
    for (id, w) in precision.weights() {
        if (w - 0.5).abs() > 1e-12 {
            return Err(fail(format!("equal-variance weight {id} is {w}, want 0.5")));
        }
    }
    Ok("size averaging, polynomial inversion, and precision weights all consistent".into())
}

fn check_chebyshev_identities(_ctx: &VerifyCtx) -> Result<String> {
    for k in 0..=8 {
        for step in 0..=24 {
            let theta = std::f64::consts::PI * step as f64 / 24.0;
            let direct = chebyshev_t(k, theta.cos());
            let trig = (k as f64 * theta).cos();
            if (direct - trig).abs() > 1e-9 {
                return Err(fail(format!("T_{k}(cos t) mismatch at step {step}")));
            }
        }
    }
    let (n, d) = (9, 2);
    let p = transformed_chebyshev(n, d)?;
    if (p.eval(0.0) - 1.0).abs() > 1e-12 {
        return Err(fail(format!("p(0) = {}", p.eval(0.0))));
    }
    let sup = (1..=n).map(|t| p.eval(t as f64).abs()).fold(0.0, f64::max);
    let closed = closed_form_value(n, d)?;
    if (sup - closed).abs() > 1e-12 {
        return Err(fail(format!("grid sup {sup} vs closed form {closed}")));
    }
    Ok("cosine identity and transformed optimizer check out".into())
}

fn check_discrete_solver(_ctx: &VerifyCtx) -> Result<String> {
    let r82 = discrete_minimax(8, 2)?;
    if (r82.value - 3.0 / 7.0).abs() > 1e-10 {
        return Err(fail(format!("grid optimum at (8,2) = {}, want 3/7", r82.value)));
    }
    if r82.alternation.len() != 3 || r82.domain != Domain::Grid {
        return Err(fail("certificate shape wrong at (8,2)".into()));
    }
    let r92 = discrete_minimax(9, 2)?;
    let closed = closed_form_value(9, 2)?;
    if (r92.value - closed).abs() > 1e-10 {
        return Err(fail(format!("(9,2) should be exact: {} vs {closed}", r92.value)));
    }
    Ok("frozen grid optima reproduced with alternating certificates".into())
}

fn check_sandwich_bounds(_ctx: &VerifyCtx) -> Result<String> {
    let mut count = 0;
    for n in [6usize, 12, 25] {
        for d in [1usize, 2, 3, 5] {
            if d >= n {
                continue;
            }
            let (lower, upper) = bounds(n, d)?;
            let v = discrete_minimax(n, d)?.value;
            let squared = v * v;
            if squared < lower - 1e-12 || squared > upper + 1e-12 {
                return Err(fail(format!(
                    "sandwich fails at ({n},{d}): {lower} <= {squared} <= {upper}"
                )));
            }
            count += 1;
        }
    }
    Ok(format!("sandwich holds at {count} sampled points"))
}

fn check_regime_tail(_ctx: &VerifyCtx) -> Result<String> {
    let n = 10_000;
    let cases = [(10usize, Regime::Small), (100, Regime::Critical), (1000, Regime::Large)];
    for (d, want) in cases {
        let report = regime(n, d)?;
        if report.regime != want {
            return Err(fail(format!("regime at d={d} classified {:?}", report.regime)));
        }
        if report.tail_upper < report.upper {
            return Err(fail(format!("tail bound below exact upper at d={d}")));
        }
        let (_, upper) = bounds(n, d)?;
        if report.upper != upper {
            return Err(fail(format!("regime report upper differs from bounds at d={d}")));
        }
    }
    Ok("critical scale at n=10000 classified correctly; tail bound dominates".into())
}

fn check_rule_error_link(_ctx: &VerifyCtx) -> Result<String> {
    let (n, d) = (9, 2);
    let result = discrete_minimax(n, d)?;
    let rule = complement_rule(&result)?;
    let err = rule_error_equivalence(&rule, n)?;
    let want = result.value * result.value;
    if (err - want).abs() > 1e-10 {
        return Err(fail(format!("rule worst case {err} vs squared optimum {want}")));
    }
    let (by_size, _) = rule.worst_case_error(n)?;
    if (by_size - err).abs() > 1e-12 {
        return Err(fail("size-profile worst case disagrees with shortcut".into()));
    }
    Ok(format!("optimal budget-{d} rule on {n} agents meets the squared optimum"))
}

fn check_complexity_profiles(_ctx: &VerifyCtx) -> Result<String> {
    let universe = Universe::full(3)?;
    let cases: [(&str, QueryDag, (usize, usize, usize)); 3] = [
        ("standard", standard_set(&universe)?, (3, 1, 1)),
        ("sum-prediction", sum_prediction_set(&universe)?, (3, 2, 3)),
        ("iterated-chain", iterated_chain_set(&universe, 1, 2, 4)?, (8, 8, 2)),
    ];
    for (label, dag, want) in &cases {
        if !dag.validate().is_valid() {
            return Err(fail(format!("{label} dag failed validation")));
        }
        let c = dag.complexity(ComplexityMode::Canonical)?;
        if (c.query_c, c.order_c, c.agent_c) != *want {
            return Err(fail(format!(
                "{label} complexity ({}, {}, {}), want {want:?}",
                c.query_c, c.order_c, c.agent_c
            )));
        }
    }
    let exact = cases[1].1.complexity(ComplexityMode::Exact)?;
    if !exact.exact || exact.query_c != 3 || exact.agent_c > 3 {
        return Err(fail("exact complexity search misbehaved on sum-prediction".into()));
    }
    Ok("all three elicitation shapes show the expected (queries, order, reach)".into())
}

fn check_payment_identity(ctx: &VerifyCtx) -> Result<String> {
    let universe = Universe::full(3)?;
    let model = SignalModel::unit_variance_on(3, universe.iter().copied())?;
    let dag = standard_set(&universe)?;
    let draw = model.sample(ctx.seed ^ 0x51);
    let realized = dag.realizations(&draw);
    for node in dag.nodes() {
        let truth = realized[node.id()];
        let miss = truth - draw.y();
        let paid = dag.payment(node.id(), truth, &realized)?;
        if (paid - (1.0 - miss * miss)).abs() > 1e-12 {
            return Err(fail(format!("{}: quadratic score identity broken", node.id())));
        }
        let delta = 0.5;
        let shifted = dag.payment(node.id(), truth + delta, &realized)?;
        let want = paid - 2.0 * delta * miss - delta * delta;
        if (shifted - want).abs() > 1e-12 {
            return Err(fail(format!("{}: perturbed payment off by identity", node.id())));
        }
    }
    Ok("per-draw quadratic score identities hold on the standard set".into())
}

fn check_truthfulness_gaps(ctx: &VerifyCtx) -> Result<String> {
    let universe = Universe::full(3)?;
    let model = SignalModel::unit_variance_on(3, universe.iter().copied())?;
    let deltas = [0.25, 0.5, 1.0];
    let dags = [
        ("standard", standard_set(&universe)?),
        ("sum-prediction", sum_prediction_set(&universe)?),
        ("iterated-chain", iterated_chain_set(&universe, 1, 2, 4)?),
    ];
    let mut max_sigma = 0.0f64;
    for (label, dag) in &dags {
        let report = dag.truthfulness_check(&model, &deltas, ctx.samples, ctx.seed)?;
        if !report.all_pass() {
            let bad = report
                .entries
                .iter()
                .find(|e| !e.gap_pass || !e.order_pass)
                .expect("some entry failed");
            return Err(fail(format!(
                "{label}: node {} delta {} gap {} (analytic {})",
                bad.node, bad.delta, bad.gap_estimate, bad.analytic
            )));
        }
        for e in &report.entries {
            if e.stderr > 0.0 {
                max_sigma = max_sigma.max((e.gap_estimate - e.analytic).abs() / e.stderr);
            }
        }
    }
    Ok(format!(
        "payment gaps match squared deviations on 3 elicitation shapes (max {:.2} sigma)",
        max_sigma
    ))
}

fn check_cmd_common_signal(ctx: &VerifyCtx) -> Result<String> {
    let report = run_common_signal(5, 10_000, ctx.seed)?;
    if report.reconstruction_worst != 0.0 || report.max_residual > 1e-10 {
        return Err(fail(format!(
            "reconstruction imperfect: worst={} residual={:e}",
            report.reconstruction_worst, report.max_residual
        )));
    }
    if (report.query_count, report.order_depth, report.agent_reach) != (6, 2, 2) {
        return Err(fail(format!(
            "complexity ({}, {}, {})",
            report.query_count, report.order_depth, report.agent_reach
        )));
    }
    if (report.fixed_rule_worst - report.d1_closed_form_squared).abs() > 1e-12 {
        return Err(fail("fixed rule misses the budget-1 closed form".into()));
    }
    if report.uneven_precision_mse > report.uneven_fixed_mse + 1e-12 {
        return Err(fail("precision weighting lost to fixed weights".into()));
    }
    Ok(format!(
        "n=5: exact recovery with one extra query, residual {:e}",
        report.max_residual
    ))
}

fn check_cmd_curves(ctx: &VerifyCtx) -> Result<String> {
    let config = ExperimentConfig {
        name: "curves".into(),
        n_values: vec![10, 16],
        d_values: Some(vec![1, 2, 3]),
        samples: 2000,
        seed: ctx.seed,
        out: None,
        format: OutputFormat::Csv,
    };
    let points = run_curves(&config)?;
    if points.len() != 6 {
        return Err(fail(format!("expected 6 points, got {}", points.len())));
    }
    if !points.windows(2).all(|w| (w[0].n, w[0].d) < (w[1].n, w[1].d)) {
        return Err(fail("points not ordered by (n, d)".into()));
    }
    for p in &points {
        let v = p.discrete_optimum.ok_or_else(|| fail("grid column missing".into()))?;
        if v < p.error_lower - 1e-9 || v > p.error_upper + 1e-9 {
            return Err(fail(format!("sandwich broken at ({}, {})", p.n, p.d)));
        }
        let mc = p.mc_estimate.ok_or_else(|| fail("mc column missing".into()))?;
        let se = p.mc_stderr.unwrap_or(0.0);
        if (mc - v).abs() > 6.0 * se + 1e-9 {
            return Err(fail(format!("mc {mc} far from optimum {v} at ({}, {})", p.n, p.d)));
        }
    }
    let d1 = points.iter().find(|p| p.n == 10 && p.d == 1).expect("row (10, 1)");
    let identity = 1.0 - 4.0 * 10.0 / (11.0 * 11.0);
    if (d1.discrete_optimum.unwrap() - identity).abs() > 1e-9 {
        return Err(fail("budget-1 column misses (n-1)^2/(n+1)^2".into()));
    }
    Ok("6-point sweep sandwiched, ordered, and MC-consistent".into())
}

fn check_cmd_query_budget(ctx: &VerifyCtx) -> Result<String> {
    let rows = run_query_budget(6, &[1, 2, 3, 4, 5], 20_000, ctx.seed)?;
    for r in &rows {
        if (r.exact - r.analytic).abs() > 1e-12 {
            return Err(fail(format!("d={}: exact {} vs analytic {}", r.d, r.exact, r.analytic)));
        }
        let mc = r.mc_estimate.expect("budget mc always present");
        let se = r.mc_stderr.expect("budget stderr always present");
        if (mc - r.analytic).abs() > 5.0 * se + 1e-9 {
            return Err(fail(format!("d={}: mc {} far from {}", r.d, mc, r.analytic)));
        }
    }
    Ok("budget table exact and MC-consistent for all budgets at n=6".into())
}

const CHECKS: &[Check] = &[
    Check {
        name: "posterior_identity",
        tag: Tag::Constructions,
        ops: &["posterior_expectation", "condition_on_agent", "sample"],
        run: check_posterior_identity,
    },
    Check {
        name: "error_accounting",
        tag: Tag::Constructions,
        ops: &["exact_mse", "error_ratio", "worst_case_error"],
        run: check_error_accounting,
    },
    Check {
        name: "intersection_family",
        tag: Tag::Constructions,
        ops: &["iter_query", "intersection_set", "validate", "optimal_intersection_rule"],
        run: check_intersection_family,
    },
    Check {
        name: "difference_family",
        tag: Tag::Constructions,
        ops: &["diff_query", "difference_set", "optimal_difference_rule"],
        run: check_difference_family,
    },
    Check {
        name: "rewrite_chain",
        tag: Tag::Constructions,
        ops: &["rewrite_to_intersection"],
        run: check_rewrite_chain,
    },
    Check {
        name: "mutation_detected",
        tag: Tag::Constructions,
        ops: &["worst_case_error"],
        run: check_mutation_detected,
    },
    Check {
        name: "randomized_rules",
        tag: Tag::Constructions,
        ops: &["random_expert", "randomized_difference_rule", "adversarial_singleton_model"],
        run: check_randomized_rules,
    },
    Check {
        name: "symmetric_rules",
        tag: Tag::Constructions,
        ops: &["symmetrize", "rule_from_polynomial", "precision_weighted_rule"],
        run: check_symmetric_rules,
    },
    Check {
        name: "chebyshev_identities",
        tag: Tag::Minimax,
        ops: &["chebyshev_t", "transformed_chebyshev", "closed_form_value"],
        run: check_chebyshev_identities,
    },
    Check {
        name: "discrete_solver",
        tag: Tag::Minimax,
        ops: &["discrete_minimax"],
        run: check_discrete_solver,
    },
    Check {
        name: "sandwich_bounds",
        tag: Tag::Minimax,
        ops: &["bounds", "discrete_minimax"],
        run: check_sandwich_bounds,
    },
    Check {
        name: "regime_tail",
        tag: Tag::Minimax,
        ops: &["regime", "bounds"],
        run: check_regime_tail,
    },
    Check {
        name: "rule_error_link",
        tag: Tag::Minimax,
        ops: &["rule_error_equivalence", "rule_from_polynomial"],
        run: check_rule_error_link,
    },
    Check {
        name: "complexity_profiles",
        tag: Tag::Incentives,
        ops: &["complexity", "validate"],
        run: check_complexity_profiles,
    },
    Check {
        name: "payment_identity",
        tag: Tag::Incentives,
        ops: &["payment", "sample"],
        run: check_payment_identity,
    },
    Check {
        name: "truthfulness_gaps",
        tag: Tag::Incentives,
        ops: &["truthfulness_check"],
        run: check_truthfulness_gaps,
    },
    Check {
        name: "cmd_common_signal",
        tag: Tag::CmdOnly,
        ops: &["cmd_common_signal"],
        run: check_cmd_common_signal,
    },
    Check {
        name: "cmd_curves",
        tag: Tag::CmdOnly,
        ops: &["cmd_curves"],
        run: check_cmd_curves,
    },
    Check {
        name: "cmd_query_budget",
        tag: Tag::CmdOnly,
        ops: &["cmd_query_budget"],
        run: check_cmd_query_budget,
    },
];

/// Runs a verify suite. Check failures (including internal errors) become
/// failing rows rather than early exits; the `all` suite additionally
/// requires that the run exercised every operation in [`OPERATIONS`].
pub fn run_verify(suite: VerifySuite, samples: u64, seed: u64) -> VerifyReport {
    let ctx = VerifyCtx { samples: samples.max(2), seed };
    let mut checks = Vec::new();
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    for check in CHECKS.iter().filter(|c| suite.includes(c.tag)) {
        let outcome = match (check.run)(&ctx) {
            Ok(detail) => CheckOutcome { name: check.name.into(), pass: true, detail },
            Err(e) => CheckOutcome { name: check.name.into(), pass: false, detail: e.to_string() },
        };
        covered.extend(check.ops);
        checks.push(outcome);
    }
    let mut ops_missing = Vec::new();
    if suite == VerifySuite::All {
        covered.insert("cmd_verify");
        ops_missing = OPERATIONS
            .iter()
            .filter(|op| !covered.contains(**op))
            .map(|op| op.to_string())
            .collect();
        checks.push(CheckOutcome {
            name: "operation_coverage".into(),
            pass: ops_missing.is_empty(),
            detail: format!(
                "{}/{} operations exercised",
                OPERATIONS.len() - ops_missing.len(),
                OPERATIONS.len()
            ),
        });
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let failed = checks.len() - passed;
    VerifyReport { suite: suite.name().into(), passed, failed, checks, ops_missing }
}

// ---------------------------------------------------------------------------
// Rendering

fn opt_cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    text.push('\n');
    text
}

pub fn render_curves(points: &[CurvePoint], format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(&points),
        OutputFormat::Csv => {
            let mut out = String::from(CURVE_CSV_HEADER);
            out.push('\n');
            for p in points {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    p.n,
                    p.d,
                    p.error_lower,
                    p.error_upper,
                    opt_cell(p.discrete_optimum),
                    opt_cell(p.mc_estimate),
                    opt_cell(p.mc_stderr),
                ));
            }
            out
        }
    }
}

pub fn render_budget(rows: &[BudgetPoint], format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(&rows),
        OutputFormat::Csv => {
            let mut out = String::from(BUDGET_CSV_HEADER);
            out.push('\n');
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.n,
                    r.d,
                    r.analytic,
                    r.exact,
                    opt_cell(r.mc_estimate),
                    opt_cell(r.mc_stderr),
                ));
            }
            out
        }
    }
}

pub fn render_common_signal(report: &CommonSignalReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => format!(
            "{}\n{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            COMMON_SIGNAL_CSV_HEADER,
            report.n,
            report.samples,
            report.query_count,
            report.order_depth,
            report.agent_reach,
            report.reconstruction_worst,
            report.mc_mse,
            report.mc_stderr,
            report.max_residual,
            report.fixed_rule_worst,
            report.d1_closed_form_squared,
            report.uneven_fixed_mse,
            report.uneven_precision_mse,
        ),
    }
}

pub fn render_minimax(row: &MinimaxRow, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(&row),
        OutputFormat::Csv => format!(
            "{}\n{},{},{},{},{},{}\n",
            MINIMAX_CSV_HEADER, row.n, row.d, row.value, row.value_squared, row.lower, row.upper,
        ),
    }
}

pub fn render_verify(report: &VerifyReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => {
            let mut out = String::from("name,pass,detail\n");
            for c in &report.checks {
                out.push_str(&format!("{},{},{}\n", c.name, c.pass, csv_field(&c.detail)));
            }
            out
        }
    }
}
