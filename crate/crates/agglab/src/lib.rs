//! Robust aggregation of expert forecasts under partial information.
//!
//! The model: independent mean-zero signals indexed by subsets of `n` agents,
//! with the target equal to their sum; agent `i` observes the signals whose
//! subset contains `i`. This crate provides
//!
//! * the signal model and exact/Monte-Carlo error evaluation
//!   ([`signal_model`]),
//! * directed acyclic graphs of elicitable queries with quadratic-score
//!   payments, validation, and complexity measures ([`query_dag`]),
//! * the intersection and difference query families, including the rewrites
//!   that recover individual signals ([`query_families`]),
//! * deterministic, randomized, and size-symmetric aggregation rules with
//!   exact worst-case error ([`rules`]),
//! * the query-budget error frontier: discrete minimax polynomials on the
//!   integer grid, Chebyshev closed forms, and sandwich bounds ([`minimax`]),
//! * the experiment harness behind the `agglab` CLI ([`harness`]).
//!
//! Everything stochastic is keyed by explicit `(seed, index)` pairs, so runs
//! reproduce bit-for-bit at any thread count.

pub mod error;
pub mod harness;
mod linalg;
pub mod linear_form;
pub mod mask;
pub mod minimax;
pub mod query_dag;
pub mod query_families;
pub mod rng;
pub mod rules;
pub mod signal_model;
pub mod testing;

pub use error::{Error, Result};
pub use linear_form::LinearForm;
pub use mask::{SubsetMask, Universe};
pub use minimax::{ChebGridPoly, Domain, MinimaxResult, PolyConstraint, PolySpec, Regime};
pub use query_dag::{ComplexityMode, ComplexityReport, QueryDag, QueryNode, TargetRef};
pub use rules::{DeterministicRule, RandomizedRule, SymmetricRule};
pub use signal_model::{SampleDraw, SignalFamily, SignalModel, SignalSpec};
