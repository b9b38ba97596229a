//! Sparse linear combinations of the latent subset signals.
//!
//! A `LinearForm` is `sum_T c_T X_T` stored as a map from subset to
//! coefficient. Every posterior, query value, and aggregate in this crate is
//! such a form; all of them are homogeneous because the signals are mean-zero,
//! so there is no constant-offset term. Exact zeros are dropped on write, which
//! keeps equality checks and supports canonical.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mask::{SubsetMask, Universe};

/// Absolute tolerance for symbolic coefficient comparisons.
pub const COEFF_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq, Debug)]
pub struct LinearForm {
    n: usize,
    coeffs: BTreeMap<SubsetMask, f64>,
}

impl LinearForm {
    pub fn zero(n: usize) -> Result<Self> {
        // Reuse the mask-side range check.
        SubsetMask::empty(n)?;
        Ok(LinearForm { n, coeffs: BTreeMap::new() })
    }

    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (SubsetMask, f64)>) -> Result<Self> {
        let mut form = Self::zero(n)?;
        for (mask, c) in entries {
            form.add_term(mask, c)?;
        }
        Ok(form)
    }

    /// The target itself: coefficient 1 on every universe subset.
    pub fn y_form(universe: &Universe) -> Self {
        let coeffs = universe.iter().map(|s| (*s, 1.0)).collect();
        LinearForm { n: universe.n(), coeffs }
    }

    /// What agent `i` expects the target to be: coefficient 1 on every
    /// universe subset whose signal agent `i` observes.
    pub fn posterior_of_y(universe: &Universe, agent: usize) -> Result<Self> {
        if agent < 1 || agent > universe.n() {
            return Err(Error::AgentOutOfRange { agent, n: universe.n() });
        }
        let coeffs = universe.members_containing(agent).map(|s| (*s, 1.0)).collect();
        Ok(LinearForm { n: universe.n(), coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, mask: &SubsetMask) -> f64 {
        self.coeffs.get(mask).copied().unwrap_or(0.0)
    }

    /// Accumulates `c` onto the coefficient of `mask`, dropping exact zeros.
    pub fn add_term(&mut self, mask: SubsetMask, c: f64) -> Result<()> {
        if mask.n() != self.n {
            return Err(Error::AgentCountMismatch { left: self.n, right: mask.n() });
        }
        let v = self.coeffs.entry(mask).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.coeffs.remove(&mask);
        }
        Ok(())
    }

    pub fn support(&self) -> impl Iterator<Item = &SubsetMask> {
        self.coeffs.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SubsetMask, &f64)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::AgentCountMismatch { left: self.n, right: other.n });
        }
        let mut out = self.clone();
        for (mask, c) in &other.coeffs {
            out.add_term(*mask, *c)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, factor: f64) -> Self {
        if factor == 0.0 {
            return LinearForm { n: self.n, coeffs: BTreeMap::new() };
        }
        let coeffs = self.coeffs.iter().map(|(m, c)| (*m, c * factor)).collect();
        LinearForm { n: self.n, coeffs }
    }

    /// Conditional expectation given agent `i`'s information: keeps exactly the
    /// terms whose subset contains `i`. Idempotent.
    pub fn condition_on_agent(&self, agent: usize) -> Result<Self> {
        if agent < 1 || agent > self.n {
            return Err(Error::AgentOutOfRange { agent, n: self.n });
        }
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(m, _)| m.contains(agent))
            .map(|(m, c)| (*m, *c))
            .collect();
        Ok(LinearForm { n: self.n, coeffs })
    }

    /// Largest absolute coefficient difference over the union of supports.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (mask, c) in &self.coeffs {
            worst = worst.max((c - other.coeff(mask)).abs());
        }
        for (mask, c) in &other.coeffs {
            if !self.coeffs.contains_key(mask) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.n == other.n && self.max_abs_diff(other) <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(n: usize, agents: &[usize]) -> SubsetMask {
        SubsetMask::from_agents(n, agents).unwrap()
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let mut f = LinearForm::zero(3).unwrap();
        f.add_term(mask(3, &[1]), 2.0).unwrap();
        f.add_term(mask(3, &[1]), -2.0).unwrap();
        assert!(f.is_zero());
        assert_eq!(f.len(), 0);
    }

    #[test]
    fn posterior_matches_brute_force() {
        // Oracle: enumerate all 3-bit masks and keep those with bit 2 set.
        let u = Universe::full(3).unwrap();
        let f = LinearForm::posterior_of_y(&u, 2).unwrap();
        let want: Vec<u32> = (1u32..8).filter(|b| b >> 1 & 1 == 1).collect();
        let got: Vec<u32> = f.support().map(|m| m.bits()).collect();
        assert_eq!(got, want);
        assert!(f.support().all(|m| (f.coeff(m) - 1.0).abs() == 0.0));
        // Spelled out: {2}, {1,2}, {2,3}, {1,2,3}.
        assert_eq!(f.len(), 4);
    }

    #[test]
    fn conditioning_is_idempotent_and_filters() {
        let u = Universe::full(4).unwrap();
        let y = LinearForm::y_form(&u);
        let c1 = y.condition_on_agent(2).unwrap();
        let c2 = c1.condition_on_agent(2).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(c1, LinearForm::posterior_of_y(&u, 2).unwrap());
    }

    #[test]
    fn conditioning_merges_overlaps() {
        // -1 * (terms with 1) + 2 * (terms with 2), then condition on 3.
        let u = Universe::full(3).unwrap();
        let f = LinearForm::posterior_of_y(&u, 1)
            .unwrap()
            .scale(-1.0)
            .add(&LinearForm::posterior_of_y(&u, 2).unwrap().scale(2.0))
            .unwrap();
        let g = f.condition_on_agent(3).unwrap();
        assert_eq!(g.coeff(&mask(3, &[1, 3])), -1.0);
        assert_eq!(g.coeff(&mask(3, &[2, 3])), 2.0);
        assert_eq!(g.coeff(&mask(3, &[1, 2, 3])), 1.0);
        assert_eq!(g.coeff(&mask(3, &[3])), 0.0);
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn algebra_round_trip() {
        let u = Universe::full(3).unwrap();
        let a = LinearForm::posterior_of_y(&u, 1).unwrap();
        let b = LinearForm::posterior_of_y(&u, 3).unwrap();
        let s = a.add(&b).unwrap().sub(&b).unwrap();
        assert!(s.approx_eq(&a, 0.0));
        assert!(a.scale(0.0).is_zero());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = LinearForm::zero(3).unwrap();
        let b = LinearForm::y_form(&Universe::full(4).unwrap());
        assert!(a.add(&b).is_err());
        let mut f = LinearForm::zero(3).unwrap();
        assert!(f.add_term(mask(4, &[1]), 1.0).is_err());
    }

    #[test]
    fn agent_range_checked() {
        let u = Universe::full(3).unwrap();
        assert!(LinearForm::posterior_of_y(&u, 0).is_err());
        assert!(LinearForm::posterior_of_y(&u, 4).is_err());
        assert!(LinearForm::y_form(&u).condition_on_agent(9).is_err());
    }
}
