//! The information structure: independent mean-zero signals indexed by agent
//! subsets, the target being their sum.
//!
//! A [`SignalModel`] assigns a variance and a sampling family to each supported
//! subset. Agent `i` observes exactly the signals whose subset contains `i`.
//! Aggregates are [`LinearForm`]s; their mean squared error against the target
//! decomposes per subset, which is what makes worst-case analysis exact: an
//! adversary concentrates variance on the worst-covered subset.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear_form::LinearForm;
use crate::mask::{SubsetMask, Universe, MAX_AGENTS};
use crate::rng::stream_rng;

/// Sampling family of one subset signal. The distribution never affects any
/// exact error quantity (only variances enter), but Monte Carlo validation
/// wants more than one shape to sample from.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFamily {
    Gaussian,
    /// `+sigma` or `-sigma` with equal probability.
    Rademacher,
    /// Identically zero; the unique family allowed at variance zero.
    PointMassZero,
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SignalSpec {
    pub variance: f64,
    pub family: SignalFamily,
}

impl SignalSpec {
    pub fn gaussian(variance: f64) -> Self {
        SignalSpec { variance, family: SignalFamily::Gaussian }
    }

    pub fn rademacher(variance: f64) -> Self {
        SignalSpec { variance, family: SignalFamily::Rademacher }
    }

    pub fn zero() -> Self {
        SignalSpec { variance: 0.0, family: SignalFamily::PointMassZero }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct SignalModel {
    n: usize,
    specs: BTreeMap<SubsetMask, SignalSpec>,
}

impl SignalModel {
    /// Invariants enforced here: masks match `n`; variances are finite and
    /// nonnegative; variance is zero iff the family is `PointMassZero`; the
    /// empty subset, if present, carries no variance; at least one subset has
    /// positive variance.
    pub fn new(n: usize, specs: BTreeMap<SubsetMask, SignalSpec>) -> Result<Self> {
        SubsetMask::empty(n)?;
        let mut total = 0.0;
        for (mask, spec) in &specs {
            if mask.n() != n {
                return Err(Error::AgentCountMismatch { left: n, right: mask.n() });
            }
            if !spec.variance.is_finite() || spec.variance < 0.0 {
                return Err(Error::BadVariance { variance: spec.variance });
            }
            if (spec.variance == 0.0) != (spec.family == SignalFamily::PointMassZero) {
                return Err(Error::FamilyVarianceMismatch);
            }
            if mask.is_empty() && spec.variance > 0.0 {
                return Err(Error::BadVariance { variance: spec.variance });
            }
            total += spec.variance;
        }
        if total <= 0.0 {
            return Err(Error::ZeroTotalVariance);
        }
        Ok(SignalModel { n, specs })
    }

    /// Unit-variance Gaussian signal on each given subset.
    pub fn unit_variance_on(n: usize, subsets: impl IntoIterator<Item = SubsetMask>) -> Result<Self> {
        let specs = subsets
            .into_iter()
            .map(|s| (s, SignalSpec::gaussian(1.0)))
            .collect();
        SignalModel::new(n, specs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn specs(&self) -> &BTreeMap<SubsetMask, SignalSpec> {
        &self.specs
    }

    pub fn variance(&self, mask: &SubsetMask) -> f64 {
        self.specs.get(mask).map(|s| s.variance).unwrap_or(0.0)
    }

    pub fn total_variance(&self) -> f64 {
        self.specs.values().map(|s| s.variance).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = &SubsetMask> {
        self.specs.keys()
    }

    /// The declared support as a universe (empty subset dropped).
    pub fn universe(&self) -> Result<Universe> {
        Universe::from_subsets(self.n, self.specs.keys().copied())
    }

    /// Agent `i`'s posterior expectation of the target, over this model's
    /// support. Unsupported subsets carry no signal, so they are omitted.
    pub fn posterior_expectation(&self, agent: usize) -> Result<LinearForm> {
        if agent < 1 || agent > self.n {
            return Err(Error::AgentOutOfRange { agent, n: self.n });
        }
        LinearForm::from_entries(
            self.n,
            self.specs
                .keys()
                .filter(|m| m.contains(agent))
                .map(|m| (*m, 1.0)),
        )
    }

    /// One independent draw of every supported signal; `(seed, index)` fully
    /// determines the draw.
    pub fn sample_indexed(&self, seed: u64, index: u64) -> SampleDraw {
        let mut rng = stream_rng(seed, index);
        let mut realizations = BTreeMap::new();
        let mut y = 0.0;
        for (mask, spec) in &self.specs {
            let sigma = spec.variance.sqrt();
            let x = match spec.family {
                SignalFamily::Gaussian => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sigma * z
                }
                SignalFamily::Rademacher => {
                    if rng.random::<bool>() {
                        sigma
                    } else {
                        -sigma
                    }
                }
                SignalFamily::PointMassZero => 0.0,
            };
            realizations.insert(*mask, x);
            y += x;
        }
        SampleDraw { n: self.n, realizations, y }
    }

    pub fn sample(&self, seed: u64) -> SampleDraw {
        self.sample_indexed(seed, 0)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            n: self.n,
            signals: self
                .specs
                .iter()
                .map(|(mask, spec)| SignalEntry {
                    subset: mask.agents().collect(),
                    variance: spec.variance,
                    family: spec.family,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        let mut specs = BTreeMap::new();
        for entry in file.signals {
            let mask = SubsetMask::from_agents(file.n, &entry.subset)?;
            if specs
                .insert(mask, SignalSpec { variance: entry.variance, family: entry.family })
                .is_some()
            {
                return Err(Error::InvalidArgument(format!(
                    "duplicate signal entry for subset {mask}"
                )));
            }
        }
        SignalModel::new(file.n, specs)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    n: usize,
    signals: Vec<SignalEntry>,
}

#[derive(Serialize, Deserialize)]
struct SignalEntry {
    subset: Vec<usize>,
    variance: f64,
    family: SignalFamily,
}

/// One joint realization of the supported signals.
#[derive(Clone, Debug)]
pub struct SampleDraw {
    n: usize,
    realizations: BTreeMap<SubsetMask, f64>,
    y: f64,
}

impl SampleDraw {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn realization(&self, mask: &SubsetMask) -> f64 {
        self.realizations.get(mask).copied().unwrap_or(0.0)
    }

    pub fn realizations(&self) -> &BTreeMap<SubsetMask, f64> {
        &self.realizations
    }

    /// The realized target: sum of all supported signals.
    pub fn y(&self) -> f64 {
        self.y
    }

    /// Evaluates a form on this draw; subsets outside the model support are
    /// identically zero.
    pub fn evaluate(&self, form: &LinearForm) -> f64 {
        form.iter().map(|(mask, c)| c * self.realization(mask)).sum()
    }
}

/// Exact mean squared error of `approx` against the target:
/// `sum_T (1 - c_T)^2 Var(X_T)` over the model support.
pub fn exact_mse(model: &SignalModel, approx: &LinearForm) -> Result<f64> {
    if model.n() != approx.n() {
        return Err(Error::AgentCountMismatch { left: model.n(), right: approx.n() });
    }
    Ok(model
        .specs()
        .iter()
        .map(|(mask, spec)| {
            let miss = 1.0 - approx.coeff(mask);
            miss * miss * spec.variance
        })
        .sum())
}

/// Exact error normalized by the target variance; 1.0 for the zero aggregate,
/// 0.0 for the target itself.
pub fn error_ratio(model: &SignalModel, approx: &LinearForm) -> Result<f64> {
    let total = model.total_variance();
    if total <= 0.0 {
        return Err(Error::ZeroTotalVariance);
    }
    Ok(exact_mse(model, approx)? / total)
}

/// Worst normalized error over all variance assignments supported on
/// `universe`: the adversary concentrates everything on the subsets where
/// `(1 - c_T)^2` peaks. Returns the value and a witness model with unit
/// variance on each argmax subset.
pub fn worst_case_error_form(approx: &LinearForm, universe: &Universe) -> Result<(f64, SignalModel)> {
    if approx.n() != universe.n() {
        return Err(Error::AgentCountMismatch { left: approx.n(), right: universe.n() });
    }
    if universe.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let mut worst = f64::NEG_INFINITY;
    for t in universe.iter() {
        let miss = 1.0 - approx.coeff(t);
        worst = worst.max(miss * miss);
    }
    let witnesses = universe.iter().copied().filter(|t| {
        let miss = 1.0 - approx.coeff(t);
        miss * miss == worst
    });
    let model = SignalModel::unit_variance_on(universe.n(), witnesses)?;
    Ok((worst, model))
}

/// Worst normalized error for a size-symmetric coefficient profile `p(t)`,
/// `t = 1..=n`: `max_t (1 - p(t))^2`, witnessed by unit variance on the prefix
/// subset `{1..t}` for each argmax size.
pub fn worst_case_error_by_size(
    n: usize,
    coeff_of_size: impl Fn(usize) -> f64,
) -> Result<(f64, SignalModel)> {
    if n == 0 || n > MAX_AGENTS {
        return Err(Error::AgentCountOutOfRange { n, max: MAX_AGENTS });
    }
    let miss: Vec<f64> = (1..=n)
        .map(|t| {
            let m = 1.0 - coeff_of_size(t);
            m * m
        })
        .collect();
    let worst = miss.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut witnesses = Vec::new();
    for (i, &m) in miss.iter().enumerate() {
        if m == worst {
            let t = i + 1;
            witnesses.push(SubsetMask::from_agents(n, &(1..=t).collect::<Vec<_>>())?);
        }
    }
    Ok((worst, SignalModel::unit_variance_on(n, witnesses)?))
}

/// Monte Carlo estimate of `error_ratio(model, approx)`: mean and standard
/// error. Chunked deterministically so the result depends only on
/// `(seed, samples)`, not on thread count.
pub fn mc_error_estimate(
    model: &SignalModel,
    approx: &LinearForm,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if model.n() != approx.n() {
        return Err(Error::AgentCountMismatch { left: model.n(), right: approx.n() });
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let total = model.total_variance();
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
                let draw = model.sample_indexed(seed, index);
                let e = draw.evaluate(approx) - draw.y();
                let r = e * e / total;
                sum += r;
                sumsq += r * r;
            }
            (sum, sumsq)
        })
        .collect();
    let (sum, sumsq) = partials
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let m = samples as f64;
    let mean = sum / m;
    let var = (sumsq / m - mean * mean).max(0.0);
    let stderr = (var / m).sqrt();
    Ok((mean, stderr))
}

/// The common-signal structure: one private signal per agent plus one signal
/// every agent observes (encoded on the full subset).
pub fn common_signal_model(private_variances: &[f64], common_variance: f64) -> Result<SignalModel> {
    let n = private_variances.len();
    SubsetMask::empty(n)?;
    let mut specs = BTreeMap::new();
    for (i, &v) in private_variances.iter().enumerate() {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::NonPositiveVariance { agent: i + 1 });
        }
        specs.insert(SubsetMask::singleton(n, i + 1)?, SignalSpec::gaussian(v));
    }
    if !common_variance.is_finite() || common_variance <= 0.0 {
        return Err(Error::BadVariance { variance: common_variance });
    }
    specs.insert(SubsetMask::full(n)?, SignalSpec::gaussian(common_variance));
    SignalModel::new(n, specs)
}
