//! Chebyshev machinery and polynomial representations.
//!
//! Two views of the same polynomial coexist. `ChebGridPoly` stores
//! coefficients in the basis `T_j(m(x))`, where `m` maps `[1, n]` onto
//! `[-1, 1]`; every solver and every evaluation uses it, because the monomial
//! basis is hopelessly ill-conditioned at degree 20+ on wide grids.
//! `PolySpec` is the monomial reporting view with the constant term pinned to
//! its constraint value.

use crate::error::{Error, Result};

/// First-kind Chebyshev polynomial by the three-term recurrence. Valid for
/// every real `x`.
pub fn chebyshev_t(d: usize, x: f64) -> f64 {
    if d == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = x;
    for _ in 1..d {
        (prev, cur) = (cur, 2.0 * x * cur - prev);
    }
    cur
}

/// `T_d` through the hyperbolic closed form, defined for `|x| >= 1`. Agrees
/// with the recurrence to 1e-10 relative error; used as an independent
/// cross-check and for stable evaluation deep outside `[-1, 1]`.
pub fn chebyshev_t_cosh(d: usize, x: f64) -> f64 {
    debug_assert!(x.abs() >= 1.0);
    let body = (d as f64 * x.abs().acosh()).cosh();
    if x < 0.0 && d % 2 == 1 {
        -body
    } else {
        body
    }
}

/// The affine map carrying `[1, n]` onto `[-1, 1]`.
pub fn grid_map(n: usize, x: f64) -> f64 {
    (2.0 * x - (n as f64 + 1.0)) / (n as f64 - 1.0)
}

/// Constraint on the constant term.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PolyConstraint {
    P0EqOne,
    P0EqZero,
}

impl PolyConstraint {
    pub fn value(self) -> f64 {
        match self {
            PolyConstraint::P0EqOne => 1.0,
            PolyConstraint::P0EqZero => 0.0,
        }
    }
}

/// Monomial-basis polynomial with a pinned constant term. A reporting and
/// interchange format: evaluation at large arguments should go through
/// [`ChebGridPoly`] instead whenever one is available.
#[derive(Clone, Debug)]
pub struct PolySpec {
    coeffs: Vec<f64>,
    constraint: PolyConstraint,
}

impl PolySpec {
    /// `coeffs[k]` multiplies `x^k`. The constant term must match the
    /// constraint to 1e-12 and is then snapped to it exactly.
    pub fn new(mut coeffs: Vec<f64>, constraint: PolyConstraint) -> Result<Self> {
        if coeffs.is_empty() {
            coeffs.push(constraint.value());
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite polynomial coefficient".into()));
        }
        let got = coeffs[0];
        let want = constraint.value();
        if (got - want).abs() > 1e-12 {
            return Err(Error::ConstraintViolated { got, want });
        }
        coeffs[0] = want;
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(PolySpec { coeffs, constraint })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn constraint(&self) -> PolyConstraint {
        self.constraint
    }

    /// Horner evaluation in the monomial basis.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

/// Polynomial in the basis `T_j(m(x))` for the grid `{1..n}`.
#[derive(Clone, Debug)]
pub struct ChebGridPoly {
    n: usize,
    coeffs: Vec<f64>,
}

impl ChebGridPoly {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridOutOfRange { n, min: 2, max: usize::MAX });
        }
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "grid polynomial needs finite, nonempty coefficients".into(),
            ));
        }
        Ok(ChebGridPoly { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Clenshaw evaluation; stable on and well beyond the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let u = grid_map(self.n, x);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            (b1, b2) = (c + 2.0 * u * b1 - b2, b1);
        }
        self.coeffs[0] + u * b1 - b2
    }

    /// Largest `|p(t)|` over the integer grid, with the smallest attaining
    /// `t``. Ties resolve to the smaller point.
    pub fn grid_max(&self) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 1);
        for t in 1..=self.n {
            let v = self.eval(t as f64).abs();
            if v > best.0 {
                best = (v, t);
            }
        }
        best
    }

    /// Monomial coefficients, lowest degree first. Exact in structure but
    /// numerically delicate at high degree; callers wanting values should
    /// use [`eval`](Self::eval).
    pub fn to_monomial(&self) -> Vec<f64> {
        let d = self.degree();
        let a = 2.0 / (self.n as f64 - 1.0);
        let b = -(self.n as f64 + 1.0) / (self.n as f64 - 1.0);
        // Monomial vectors of T_j(a x + b) by the recurrence.
        let mut prev = vec![1.0];
        let mut cur = vec![b, a];
        let mut out = vec![0.0; d + 1];
        out[0] += self.coeffs[0] * prev[0];
        if d >= 1 {
            for (k, &c) in cur.iter().enumerate() {
                out[k] += self.coeffs[1] * c;
            }
        }
        for j in 2..=d {
            // next = 2 (a x + b) cur - prev
            let mut next = vec![0.0; j + 1];
            for (k, &c) in cur.iter().enumerate() {
                next[k] += 2.0 * b * c;
                next[k + 1] += 2.0 * a * c;
            }
            for (k, &c) in prev.iter().enumerate() {
                next[k] -= c;
            }
            for (k, &c) in next.iter().enumerate() {
                out[k] += self.coeffs[j] * c;
            }
            prev = cur;
            cur = next;
        }
        out
    }

    /// Monomial reporting view with the constant term pinned. The conversion
    /// may carry rounding noise at high degree, so the constant term is
    /// sanity-checked loosely here and then snapped exactly.
    pub fn to_poly_spec(&self, constraint: PolyConstraint) -> Result<PolySpec> {
        let mut coeffs = self.to_monomial();
        let got = coeffs[0];
        let want = constraint.value();
        if (got - want).abs() > 1e-6 {
            return Err(Error::ConstraintViolated { got, want });
        }
        coeffs[0] = want;
        PolySpec::new(coeffs, constraint)
    }
}

/// The minimum over degree-`d` polynomials with `p(0) = 1` of the maximum of
/// `|p|` over the interval `[1, n]`: `2 / (q^d + q^-d)` with
/// `q = (sqrt n + 1)/(sqrt n - 1)`.
pub fn closed_form_value(n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::GridOutOfRange { n, min: 2, max: usize::MAX });
    }
    if d == 0 {
        return Err(Error::DegreeOutOfRange { d, max: usize::MAX });
    }
    let s = (n as f64).sqrt();
    let q = (s + 1.0) / (s - 1.0);
    let powd = (d as f64 * q.ln()).exp();
    Ok(2.0 / (powd + 1.0 / powd))
}

/// `T_d(m(x)) / T_d(m(0))`: the unique interval optimizer, already
/// normalized to 1 at zero. In the grid basis it is a single scaled basis
/// element.
pub fn transformed_chebyshev(n: usize, d: usize) -> Result<ChebGridPoly> {
    if n < 2 {
        return Err(Error::GridOutOfRange { n, min: 2, max: usize::MAX });
    }
    if d == 0 {
        return Err(Error::DegreeOutOfRange { d, max: usize::MAX });
    }
    let norm = chebyshev_t_cosh(d, grid_map(n, 0.0));
    let mut coeffs = vec![0.0; d + 1];
    coeffs[d] = 1.0 / norm;
    ChebGridPoly::new(n, coeffs)
}

/// Extrema of the transformed Chebyshev polynomial on `[1, n]`, ascending:
/// `((n-1) cos(k pi / d) + (n+1)) / 2` for `k = d..0`.
pub fn chebyshev_extrema(n: usize, d: usize) -> Vec<f64> {
    (0..=d)
        .rev()
        .map(|k| ((n as f64 - 1.0) * (k as f64 * std::f64::consts::PI / d as f64).cos()
            + (n as f64 + 1.0))
            / 2.0)
        .collect()
}
