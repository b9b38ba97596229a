//! Agent subsets as bitmasks.
//!
//! Agents are numbered `1..=n` with `n <= 24`; bit `i-1` of `bits` records
//! membership of agent `i`. A [`Universe`] is an explicit, sorted list of the
//! nonempty subsets a computation ranges over. Keeping the universe caller-
//! declared lets sparse models avoid the full `2^n - 1` lattice; full
//! enumeration is only permitted for `n <= 16`.

use std::fmt;

use crate::error::{Error, Result};

/// Hard cap on the agent count so subsets fit in a `u32` mask.
pub const MAX_AGENTS: usize = 24;

/// Largest `n` for which full-lattice enumeration is allowed.
pub const MAX_FULL_UNIVERSE: usize = 16;

/// A subset of the agent set `{1, ..., n}`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetMask {
    n: u8,
    bits: u32,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_AGENTS {
        return Err(Error::AgentCountOutOfRange { n, max: MAX_AGENTS });
    }
    Ok(())
}

impl SubsetMask {
    /// The empty subset; denotes the degenerate signal that is identically zero.
    pub fn empty(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(SubsetMask { n: n as u8, bits: 0 })
    }

    /// The full agent set `{1, ..., n}`.
    pub fn full(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(SubsetMask { n: n as u8, bits: (1u32 << n) - 1 })
    }

    pub fn singleton(n: usize, agent: usize) -> Result<Self> {
        Self::empty(n)?.with(agent)
    }

    /// Builds a subset from 1-based agent indices. Repeats are idempotent.
    pub fn from_agents(n: usize, agents: &[usize]) -> Result<Self> {
        let mut mask = Self::empty(n)?;
        for &a in agents {
            mask = mask.with(a)?;
        }
        Ok(mask)
    }

    /// Raw-bits constructor; every set bit must lie below `n`.
    pub fn from_bits(n: usize, bits: u32) -> Result<Self> {
        check_n(n)?;
        if bits & !((1u32 << n) - 1) != 0 {
            return Err(Error::InvalidArgument(format!(
                "mask {bits:#x} has bits outside 1..={n}"
            )));
        }
        Ok(SubsetMask { n: n as u8, bits })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, agent: usize) -> bool {
        agent >= 1 && agent <= self.n() && self.bits >> (agent - 1) & 1 == 1
    }

    pub fn with(&self, agent: usize) -> Result<Self> {
        if agent < 1 || agent > self.n() {
            return Err(Error::AgentOutOfRange { agent, n: self.n() });
        }
        Ok(SubsetMask { n: self.n, bits: self.bits | 1 << (agent - 1) })
    }

    pub fn without(&self, agent: usize) -> Self {
        if agent >= 1 && agent <= self.n() {
            SubsetMask { n: self.n, bits: self.bits & !(1 << (agent - 1)) }
        } else {
            *self
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        debug_assert_eq!(self.n, other.n);
        self.bits & !other.bits == 0
    }

    pub fn is_superset_of(&self, other: &Self) -> bool {
        other.is_subset_of(self)
    }

    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        SubsetMask { n: self.n, bits: self.bits | other.bits }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        SubsetMask { n: self.n, bits: self.bits & other.bits }
    }

    pub fn intersects(&self, other: &Self) -> bool {
        debug_assert_eq!(self.n, other.n);
        self.bits & other.bits != 0
    }

    /// Ascending 1-based agent indices.
    pub fn agents(&self) -> impl Iterator<Item = usize> + '_ {
        let n = self.n();
        (1..=n).filter(move |&a| self.contains(a))
    }

    pub fn max_agent(&self) -> Option<usize> {
        if self.bits == 0 {
            None
        } else {
            Some(32 - self.bits.leading_zeros() as usize)
        }
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, a) in self.agents().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self, self.n)
    }
}

/// The declared support: a sorted, deduplicated list of nonempty subsets.
///
/// The empty subset is dropped on construction; it denotes the identically
/// zero signal and can never contribute variance or coefficients.
#[derive(Clone, PartialEq)]
pub struct Universe {
    n: usize,
    subsets: Vec<SubsetMask>,
}

impl Universe {
    /// Every nonempty subset of `{1, ..., n}`; refused for `n > 16`.
    pub fn full(n: usize) -> Result<Self> {
        check_n(n)?;
        if n > MAX_FULL_UNIVERSE {
            return Err(Error::UniverseTooLarge { n, max: MAX_FULL_UNIVERSE });
        }
        let subsets = (1..1u32 << n)
            .map(|bits| SubsetMask { n: n as u8, bits })
            .collect();
        Ok(Universe { n, subsets })
    }

    pub fn from_subsets(n: usize, subsets: impl IntoIterator<Item = SubsetMask>) -> Result<Self> {
        check_n(n)?;
        let mut v: Vec<SubsetMask> = Vec::new();
        for s in subsets {
            if s.n() != n {
                return Err(Error::AgentCountMismatch { left: n, right: s.n() });
            }
            if !s.is_empty() {
                v.push(s);
            }
        }
        v.sort();
        v.dedup();
        if v.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        Ok(Universe { n, subsets: v })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SubsetMask> {
        self.subsets.iter()
    }

    pub fn contains(&self, mask: &SubsetMask) -> bool {
        self.subsets.binary_search(mask).is_ok()
    }

    /// Position of `mask` in the sorted subset list.
    pub fn position(&self, mask: &SubsetMask) -> Option<usize> {
        self.subsets.binary_search(mask).ok()
    }

    pub fn members_containing(&self, agent: usize) -> impl Iterator<Item = &SubsetMask> {
        self.subsets.iter().filter(move |s| s.contains(agent))
    }

    pub fn supersets_of<'a>(&'a self, s: &'a SubsetMask) -> impl Iterator<Item = &'a SubsetMask> {
        self.subsets.iter().filter(move |t| t.is_superset_of(s))
    }
}

impl fmt::Debug for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Universe(n={}, {} subsets)", self.n, self.subsets.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_basics() {
        let s = SubsetMask::from_agents(4, &[1, 3]).unwrap();
        assert_eq!(s.size(), 2);
        assert!(s.contains(1) && s.contains(3));
        assert!(!s.contains(2) && !s.contains(4));
        assert_eq!(s.agents().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(s.max_agent(), Some(3));
        assert_eq!(s.to_string(), "{1,3}");
        assert_eq!(s.without(3).agents().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn mask_bounds() {
        assert!(SubsetMask::empty(0).is_err());
        assert!(SubsetMask::empty(25).is_err());
        assert!(SubsetMask::empty(24).is_ok());
        assert!(SubsetMask::singleton(3, 4).is_err());
        assert!(SubsetMask::singleton(3, 0).is_err());
    }

    #[test]
    fn subset_relations() {
        let a = SubsetMask::from_agents(5, &[1, 2]).unwrap();
        let b = SubsetMask::from_agents(5, &[1, 2, 4]).unwrap();
        assert!(a.is_subset_of(&b));
        assert!(b.is_superset_of(&a));
        assert!(!b.is_subset_of(&a));
        assert!(a.intersects(&b));
        assert_eq!(a.union(&b), b);
        assert_eq!(a.intersection(&b), a);
    }

    #[test]
    fn full_universe_counts() {
        for n in 1..=8 {
            let u = Universe::full(n).unwrap();
            assert_eq!(u.len(), (1usize << n) - 1);
        }
        assert!(Universe::full(17).is_err());
    }

    #[test]
    fn universe_drops_empty_and_dedupes() {
        let e = SubsetMask::empty(3).unwrap();
        let s = SubsetMask::singleton(3, 2).unwrap();
        let u = Universe::from_subsets(3, [e, s, s]).unwrap();
        assert_eq!(u.len(), 1);
        assert!(u.contains(&s));
        assert!(!u.contains(&e));
        assert!(Universe::from_subsets(3, [e]).is_err());
    }

    #[test]
    fn superset_filter_matches_brute_force() {
        let u = Universe::full(5).unwrap();
        let s = SubsetMask::from_agents(5, &[2, 4]).unwrap();
        let got: Vec<u32> = u.supersets_of(&s).map(|t| t.bits()).collect();
        let want: Vec<u32> = (1u32..32).filter(|b| b & s.bits() == s.bits()).collect();
        assert_eq!(got, want);
    }
}
