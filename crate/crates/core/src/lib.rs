//! Exact reduction of big zeta values to multiple zeta values.
//!
//! A big zeta value is the series `Σ_{n ∈ ℕ^d} 1/∏_c L_c(n)` attached to a
//! basic 0/1 matrix whose rows are contiguous runs of ones. Multiple zeta
//! values and Tornheim sums are special cases. [`engine::reduce`] rewrites any
//! such value, exactly, into a rational combination of formal MZVs of the
//! same weight using partial fractions over column dependencies and
//! harmonic-product splittings of summation ranges. Every rewrite can be
//! checked independently ([`verify`]), and [`numeric`] and [`periods`]
//! evaluate both sides in floating point.

pub mod corpus;
pub mod engine;
pub mod error;
pub mod expression;
pub mod linalg;
pub mod moves;
pub mod mzv;
pub mod numeric;
pub mod pattern;
pub mod periods;
pub mod rat;
pub mod region;
pub mod term;
pub mod trace;
pub mod verify;

pub use engine::{reduce, Method, ReduceConfig, Reduction};
pub use error::{CheckFailed, EvalError, MoveError, PatternError, ReduceError, TermError};
pub use expression::Expression;
pub use linalg::{CircuitDependency, ColumnVector};
pub use mzv::{stuffle_words, MzvCombination, MzvWord};
pub use pattern::{Pattern, RowInterval};
pub use rat::Rat;
pub use term::{Term, TermKey};
pub use trace::{Move, ReductionTrace, TraceRecord};
