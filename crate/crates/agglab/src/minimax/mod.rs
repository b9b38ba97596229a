//! Constrained polynomial minimax: the machinery tying aggregation error to
//! Chebyshev approximation.
//!
//! The central problem: among polynomials of degree at most `d` with
//! `p(0) = 1`, minimize the largest `|p(t)|` over `t` in the interval
//! `[1, n]` (continuous domain) or over the integers `{1..n}` (grid domain).
//! The continuous optimum has a closed form through transformed Chebyshev
//! polynomials; the grid optimum is computed by a discrete Remez exchange and
//! cross-checked against an independent dense simplex where the tableau is
//! affordable. Every result carries an equioscillation certificate that
//! [`validate_certificate`] re-checks without trusting either solver.

mod poly;
mod remez;
pub(crate) mod simplex;

pub use poly::transformed_chebyshev as transformed_chebyshev_grid;
pub use poly::{
    chebyshev_extrema, chebyshev_t, chebyshev_t_cosh, closed_form_value, grid_map, ChebGridPoly,
    PolyConstraint, PolySpec,
};

use crate::error::{Error, Result};

/// Largest grid supported by the discrete solvers.
pub const MAX_GRID_N: usize = 2000;

/// Largest polynomial degree the solvers accept. Beyond this, binary64
/// headroom for the certificate tolerances is gone.
pub const MAX_DEGREE: usize = 30;

/// Grid size up to which every discrete solve is independently re-solved by
/// the dense simplex. The tableau is (2n) x (2d+1+2n); past this point the
/// exchange algorithm runs alone.
const SIMPLEX_CROSS_CHECK_CAP: usize = 600;

/// Where the minimax was taken.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Domain {
    /// The real interval `[1, n]`.
    Continuous,
    /// The integers `{1, .., n}`.
    Grid,
}

/// A solved minimax problem with its equioscillation certificate.
///
/// `value` is the optimal max of `|p|` (not squared). `poly` is the monomial
/// reporting view; `grid_poly` is the numerically trustworthy Chebyshev-basis
/// form that all validation evaluates. `alternation` lists `d + 1` points
/// with strictly alternating signs, each attaining `value`.
#[derive(Clone, Debug)]
pub struct MinimaxResult {
    pub n: usize,
    pub d: usize,
    pub value: f64,
    pub poly: PolySpec,
    pub grid_poly: ChebGridPoly,
    pub alternation: Vec<(f64, i8)>,
    pub domain: Domain,
}

/// Position of the degree budget relative to the critical scale `ceil(sqrt n)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Regime {
    Small,
    Critical,
    Large,
}

/// Regime classification with the applicable finite-`n` squared-error bounds.
#[derive(Clone, Debug)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Lower bound on the squared grid optimum; 0 when the Markov factor
    /// goes nonpositive (`d*d >= n-1`), where the bound is vacuous.
    pub lower: f64,
    /// Upper bound: the squared continuous optimum.
    pub upper: f64,
    /// The looser but closed-form tail bound `4 exp(-4d/(sqrt n + 1))`,
    /// valid for every `(n, d)`.
    pub tail_upper: f64,
}

fn check_degree(d: usize) -> Result<()> {
    if !(1..=MAX_DEGREE).contains(&d) {
        return Err(Error::DegreeOutOfRange { d, max: MAX_DEGREE });
    }
    Ok(())
}

/// The transformed Chebyshev polynomial as a monomial-basis spec with
/// `p(0) = 1`. Prefer [`transformed_chebyshev_grid`] for evaluation; the
/// monomial view exists for reporting and interchange.
pub fn transformed_chebyshev(n: usize, d: usize) -> Result<PolySpec> {
    check_degree(d)?;
    poly::transformed_chebyshev(n, d)?.to_poly_spec(PolyConstraint::P0EqOne)
}

/// Solves the continuous problem on `[1, n]` exactly via the closed form and
/// certifies the extrema of the transformed Chebyshev optimizer.
pub fn continuous_minimax(n: usize, d: usize) -> Result<MinimaxResult> {
    check_degree(d)?;
    let value = closed_form_value(n, d)?;
    let grid_poly = poly::transformed_chebyshev(n, d)?;
    let alternation: Vec<(f64, i8)> = chebyshev_extrema(n, d)
        .into_iter()
        .map(|x| {
            let s = if grid_poly.eval(x) >= 0.0 { 1 } else { -1 };
            (x, s)
        })
        .collect();
    let spec = grid_poly.to_poly_spec(PolyConstraint::P0EqOne)?;
    let result = MinimaxResult {
        n,
        d,
        value,
        poly: spec,
        grid_poly,
        alternation,
        domain: Domain::Continuous,
    };
    validate_certificate(&result)?;
    Ok(result)
}

/// Solves the grid problem on `{1..n}`.
///
/// The Remez exchange produces the optimum; on grids up to
/// `SIMPLEX_CROSS_CHECK_CAP` an independent simplex solve must agree within
/// 1e-9 or the call fails. The returned certificate is the lexicographically
/// smallest alternating set of attaining grid points and has already passed
/// [`validate_certificate`].
pub fn discrete_minimax(n: usize, d: usize) -> Result<MinimaxResult> {
    if !(2..=MAX_GRID_N).contains(&n) {
        return Err(Error::GridOutOfRange { n, min: 2, max: MAX_GRID_N });
    }
    check_degree(d)?;
    if d >= n {
        return Err(Error::DegreeOutOfRange { d, max: n - 1 });
    }
    let (value, grid_poly) = remez::solve(n, d)?;
    if n <= SIMPLEX_CROSS_CHECK_CAP {
        // Non-convergence of the check solver degrades to exchange-only;
        // a successful solve that disagrees is a hard error.
        if let Ok((lp_value, _)) = simplex::solve(n, d, simplex::PivotRule::Dantzig) {
            if (lp_value - value).abs() > 1e-9 {
                return Err(Error::Solver(format!(
                    "solver disagreement at (n={n}, d={d}): exchange {value} vs simplex {lp_value}"
                )));
            }
        }
    }
    let alternation = grid_certificate(&grid_poly, value, d)?;
    let spec = grid_poly.to_poly_spec(PolyConstraint::P0EqOne)?;
    let result = MinimaxResult {
        n,
        d,
        value,
        poly: spec,
        grid_poly,
        alternation,
        domain: Domain::Grid,
    };
    validate_certificate(&result)?;
    Ok(result)
}

/// Earliest-choice alternating subsequence of the attaining grid points.
/// Greedy is complete here: keeping the earliest point of each sign run
/// never shortens the longest alternating subsequence, and the result is
/// lexicographically smallest among full-length certificates.
fn grid_certificate(p: &ChebGridPoly, value: f64, d: usize) -> Result<Vec<(f64, i8)>> {
    let mut cert: Vec<(f64, i8)> = Vec::with_capacity(d + 1);
    for t in 1..=p.n() {
        let v = p.eval(t as f64);
        if v.abs() < value - 1e-9 {
            continue;
        }
        let s: i8 = if v >= 0.0 { 1 } else { -1 };
        if cert.last().is_none_or(|&(_, last)| last != s) {
            cert.push((t as f64, s));
            if cert.len() == d + 1 {
                return Ok(cert);
            }
        }
    }
    Err(Error::Certificate(format!(
        "found {} alternating extremal grid points, need {}",
        cert.len(),
        d + 1
    )))
}

/// Re-derives every certificate claim from the polynomial alone, trusting no
/// solver state: positivity of the optimum, the `p(0) = 1` constraint, the
/// degree budget, `d + 1` strictly increasing in-domain points (integers on
/// the grid domain), attainment within 1e-9, well-determined strictly
/// alternating signs, and agreement of the claimed value with the actual
/// maximum over the domain.
pub fn validate_certificate(result: &MinimaxResult) -> Result<()> {
    let fail = |msg: String| -> Result<()> { Err(Error::Certificate(msg)) };
    let n = result.n;
    let d = result.d;
    let value = result.value;
    let p = &result.grid_poly;

    if value.is_nan() || value <= 1e-12 {
        return fail(format!("optimum must be strictly positive, got {value}"));
    }
    if p.n() != n {
        return fail(format!("polynomial grid {} mismatches n={n}", p.n()));
    }
    if p.degree() > d || result.poly.degree() > d {
        return fail(format!("degree exceeds budget {d}"));
    }
    let p0 = p.eval(0.0);
    if (p0 - 1.0).abs() > 1e-12 {
        return fail(format!("p(0) = {p0}, constraint violated"));
    }
    if result.alternation.len() != d + 1 {
        return fail(format!(
            "certificate has {} points, need {}",
            result.alternation.len(),
            d + 1
        ));
    }
    let mut prev_point = f64::NEG_INFINITY;
    let mut prev_sign = 0i8;
    for &(x, s) in &result.alternation {
        if x <= prev_point {
            return fail(format!("certificate points must strictly increase at {x}"));
        }
        prev_point = x;
        if x < 1.0 - 1e-9 || x > n as f64 + 1e-9 {
            return fail(format!("certificate point {x} outside [1, {n}]"));
        }
        if result.domain == Domain::Grid && x.fract() != 0.0 {
            return fail(format!("grid certificate point {x} is not an integer"));
        }
        let v = p.eval(x);
        if v.abs() < value - 1e-9 {
            return fail(format!("point {x} attains {} < optimum {value}", v.abs()));
        }
        if v.abs() <= 1e-10 {
            return fail(format!("sign at {x} is ill-determined"));
        }
        let vs: i8 = if v > 0.0 { 1 } else { -1 };
        if s != vs {
            return fail(format!("stored sign {s} at {x} mismatches evaluation"));
        }
        if s == prev_sign {
            return fail(format!("signs fail to alternate at {x}"));
        }
        prev_sign = s;
    }
    match result.domain {
        Domain::Grid => {
            let (max_abs, at) = p.grid_max();
            if (max_abs - value).abs() > 1e-9 {
                return fail(format!(
                    "claimed optimum {value} but grid max is {max_abs} at t={at}"
                ));
            }
        }
        Domain::Continuous => {
            // The certificate points already pin the max from below; a dense
            // scan checks nothing on the interval pokes above it.
            let samples = 4096;
            for k in 0..=samples {
                let x = 1.0 + (n as f64 - 1.0) * k as f64 / samples as f64;
                let v = p.eval(x).abs();
                if v > value + 1e-9 {
                    return fail(format!("interval value {v} at {x} exceeds optimum {value}"));
                }
            }
        }
    }
    Ok(())
}

/// Worst-case error of a size-symmetric rule, read off its coefficient
/// profile: `max_{t in 1..=n} (1 - p(t))^2`. The adversary concentrates
/// variance on a single size class, so this equals the model-level worst
/// case evaluated over every subset; the library cross-checks the two
/// routes on explicit models.
pub fn rule_error_equivalence(rule: &crate::rules::SymmetricRule, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one agent".into()));
    }
    Ok((1..=n)
        .map(|t| {
            let miss = 1.0 - rule.coefficient_for_size(t);
            miss * miss
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Sandwich on the squared grid optimum: `upper` is the squared continuous
/// closed form, `lower` scales it by the squared Markov factor
/// `1 - d*d/(n-1)`, clamped to 0 where that factor is nonpositive.
pub fn bounds(n: usize, d: usize) -> Result<(f64, f64)> {
    let v = closed_form_value(n, d)?;
    let upper = v * v;
    let factor = 1.0 - (d as f64) * (d as f64) / (n as f64 - 1.0);
    let lower = if factor <= 0.0 { 0.0 } else { factor * factor * upper };
    Ok((lower, upper))
}

/// Classifies `d` against the critical scale `ceil(sqrt n)` and reports the
/// finite-`n` bounds that apply there. No asymptotic claim is made; the
/// numbers are exact evaluations at this `(n, d)`.
pub fn regime(n: usize, d: usize) -> Result<RegimeReport> {
    if n < 2 {
        return Err(Error::GridOutOfRange { n, min: 2, max: usize::MAX });
    }
    if d < 1 || d >= n {
        return Err(Error::DegreeOutOfRange { d, max: n.saturating_sub(1) });
    }
    let (lower, upper) = bounds(n, d)?;
    let critical = (n as f64).sqrt().ceil() as usize;
    let regime = if d < critical {
        Regime::Small
    } else if d == critical {
        Regime::Critical
    } else {
        Regime::Large
    };
    let tail_upper = 4.0 * (-4.0 * d as f64 / ((n as f64).sqrt() + 1.0)).exp();
    Ok(RegimeReport { regime, lower, upper, tail_upper })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_certificates_validate() {
        let r = continuous_minimax(9, 1).unwrap();
        assert!((r.value - 0.8).abs() < 1e-12);
        assert_eq!(r.alternation.len(), 2);
        assert!((r.alternation[0].0 - 1.0).abs() < 1e-12);
        assert_eq!(r.alternation[0].1, 1);
        assert!((r.alternation[1].0 - 9.0).abs() < 1e-12);
        assert_eq!(r.alternation[1].1, -1);
        assert_eq!(r.poly.coeffs().len(), 2);
        assert!((r.poly.coeffs()[1] + 0.2).abs() < 1e-12);

        for (n, d) in [(9usize, 2usize), (100, 7), (613, 13), (2000, 25)] {
            let r = continuous_minimax(n, d).unwrap();
            assert_eq!(r.alternation.len(), d + 1);
            assert_eq!(r.domain, Domain::Continuous);
        }
    }

    #[test]
    fn discrete_exact_iff_classes() {
        for n in 4..=30 {
            let exact1 = discrete_minimax(n, 1).unwrap().value;
            assert!(
                (exact1 - closed_form_value(n, 1).unwrap()).abs() < 1e-10,
                "d=1 must be exact at n={n}"
            );
            for d in [2usize, 3] {
                let got = discrete_minimax(n, d).unwrap().value;
                let cont = closed_form_value(n, d).unwrap();
                let exact = match d {
                    2 => n % 2 == 1,
                    3 => n % 4 == 1,
                    _ => unreachable!(),
                };
                if exact {
                    assert!((got - cont).abs() < 1e-10, "(n,d)=({n},{d}) should be exact");
                } else {
                    assert!(got < cont - 1e-9, "(n,d)=({n},{d}): {got} vs {cont}");
                }
            }
        }
    }

    #[test]
    fn discrete_frozen_values() {
        assert!((discrete_minimax(8, 2).unwrap().value - 3.0 / 7.0).abs() < 1e-10);
        assert!((discrete_minimax(9, 2).unwrap().value - 2.0 / 4.25).abs() < 1e-10);
        assert!((discrete_minimax(5, 4).unwrap().value - 1.0 / 31.0).abs() < 1e-12);
        // Extreme corner: value ~ 4.7e-10, where the exchange convergence
        // slack is ~2e-6 relative; this is a smoke test, not a precision one.
        let extreme = discrete_minimax(31, 30).unwrap();
        let want = 1.0 / (((1u64 << 31) - 1) as f64);
        assert!(
            (extreme.value / want - 1.0).abs() < 1e-6,
            "(31,30): {} vs {want}",
            extreme.value
        );
    }

    #[test]
    fn discrete_value_monotone() {
        let mut prev = f64::INFINITY;
        for d in 1..=8 {
            let v = discrete_minimax(20, d).unwrap().value;
            assert!(v <= prev + 1e-12, "value must be non-increasing in d");
            prev = v;
        }
        let mut prev = 0.0;
        for n in 5..=40 {
            let v = discrete_minimax(n, 3).unwrap().value;
            assert!(v >= prev - 1e-12, "value must be non-decreasing in n");
            prev = v;
        }
    }

    #[test]
    fn sandwich_bounds_hold() {
        for n in [5usize, 9, 16, 33, 60, 121] {
            for d in 1..n.min(9) {
                let v = discrete_minimax(n, d).unwrap().value;
                let (lower, upper) = bounds(n, d).unwrap();
                assert!(lower <= v * v + 1e-12, "(n,d)=({n},{d}) lower");
                assert!(v * v <= upper + 1e-12, "(n,d)=({n},{d}) upper");
            }
        }
    }

    #[test]
    fn rejects_corrupted_certificates() {
        let good = discrete_minimax(9, 2).unwrap();
        validate_certificate(&good).unwrap();

        let mut wrong_value = good.clone();
        wrong_value.value *= 1.01;
        assert!(validate_certificate(&wrong_value).is_err());

        let mut flipped = good.clone();
        flipped.alternation[1].1 = -flipped.alternation[1].1;
        assert!(validate_certificate(&flipped).is_err());

        let mut off_grid = good.clone();
        off_grid.alternation[1].0 += 0.5;
        assert!(validate_certificate(&off_grid).is_err());

        let mut short = good.clone();
        short.alternation.pop();
        assert!(validate_certificate(&short).is_err());

        let mut zeroed = good.clone();
        zeroed.value = 0.0;
        assert!(validate_certificate(&zeroed).is_err());

        // Continuous optimizer passed off as a grid solution: its value is
        // not attainable by d+1 alternating integer points at (8,2).
        let cont = continuous_minimax(8, 2).unwrap();
        let mut imposter = cont.clone();
        imposter.domain = Domain::Grid;
        imposter.alternation = vec![(1.0, 1), (4.0, -1), (8.0, 1)];
        assert!(validate_certificate(&imposter).is_err());
    }

    #[test]
    fn range_checks() {
        assert!(discrete_minimax(1, 1).is_err());
        assert!(discrete_minimax(2001, 5).is_err());
        assert!(discrete_minimax(10, 10).is_err());
        assert!(discrete_minimax(50, 31).is_err());
        assert!(continuous_minimax(9, 0).is_err());
        assert!(regime(10, 10).is_err());
    }

    #[test]
    fn rule_error_equivalence_routes_agree() {
        use crate::mask::Universe;
        use crate::rules::{rule_from_polynomial, SymmetricRule};
        use crate::signal_model::worst_case_error_form;

        let zero = SymmetricRule::new(vec![0.0]).unwrap();
        assert_eq!(rule_error_equivalence(&zero, 7).unwrap(), 1.0);

        // The optimal grid polynomial induces the rule attaining the squared
        // optimum: its coefficient profile is 1 - p*(t).
        let opt = discrete_minimax(9, 2).unwrap();
        let mut flipped: Vec<f64> = opt.poly.coeffs().iter().map(|c| -c).collect();
        flipped[0] = 0.0;
        let profile = PolySpec::new(flipped, PolyConstraint::P0EqZero).unwrap();
        let induced = rule_from_polynomial(&profile, 2).unwrap();
        let err = rule_error_equivalence(&induced, 9).unwrap();
        let want = (2.0 / 4.25) * (2.0 / 4.25);
        assert!((err - opt.value * opt.value).abs() < 1e-10);
        assert!((err - want).abs() < 1e-10);

        // Size-class shortcut equals the full model-level adversary.
        for n in [5usize, 8, 12] {
            for rule in [
                SymmetricRule::new(vec![0.3]).unwrap(),
                SymmetricRule::new(vec![0.5, -0.1]).unwrap(),
                induced.clone(),
            ] {
                let shortcut = rule_error_equivalence(&rule, n).unwrap();
                let form = rule.output_form(n).unwrap();
                let (full, _) =
                    worst_case_error_form(&form, &Universe::full(n).unwrap()).unwrap();
                assert!((shortcut - full).abs() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn regime_classification_and_tail() {
        assert_eq!(regime(10_000, 10).unwrap().regime, Regime::Small);
        assert_eq!(regime(10_000, 100).unwrap().regime, Regime::Critical);
        assert_eq!(regime(10_000, 1000).unwrap().regime, Regime::Large);
        assert_eq!(regime(17, 5).unwrap().regime, Regime::Critical);
        for (n, d) in [(100usize, 3usize), (100, 11), (10_000, 200), (10_000, 800)] {
            let r = regime(n, d).unwrap();
            assert!(r.lower <= r.upper);
            assert!(
                r.upper <= r.tail_upper + 1e-300,
                "(n,d)=({n},{d}): {} vs {}",
                r.upper,
                r.tail_upper
            );
        }
        let vacuous = regime(10, 4).unwrap();
        assert_eq!(vacuous.lower, 0.0);
    }
}
