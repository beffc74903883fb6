use thiserror::Error;

use crate::mzv::MzvWord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("column {0} is not covered by any row")]
    ZeroColumn(usize),
    #[error("rows are linearly dependent")]
    RankDeficient,
    #[error("malformed interval [{start}, {end}] for width {width}")]
    MalformedInterval { start: usize, end: usize, width: usize },
    #[error("pattern has no rows")]
    Empty,
    #[error("depth {0} exceeds the supported maximum")]
    TooDeep(usize),
    #[error("expected {expected} exponents, got {got}")]
    ExponentCount { expected: usize, got: usize },
    #[error("exponent at column {0} must be positive")]
    NonPositiveExponent(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("row supports are not a chain")]
    NotChain,
    #[error("row index {0} out of range")]
    RowOutOfRange(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("pivot column {0} has zero coefficient in the circuit")]
    InvalidPivot(usize),
    #[error("column {0} has exponent zero and cannot be lowered")]
    ExponentUnderflow(usize),
    #[error("rows {0} and {1} are not disjoint adjacent roots")]
    RowsNotAdjacent(usize, usize),
    #[error("rows {0} and {1} do not share a start column with distinct ends")]
    RowsDontShareStart(usize, usize),
    #[error("auxiliary column breaks the interval structure")]
    IntervalBroken,
    #[error("square reduction exceeded {0} steps")]
    NonTermination(usize),
    #[error("weight changed from {before} to {after}")]
    WeightViolation { before: u32, after: u32 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Move(#[from] MoveError),
    #[error("progress violation: {0}")]
    ProgressViolation(String),
    #[error("term budget of {0} exceeded")]
    TermBudgetExceeded(usize),
    #[error("input terms have mixed weights")]
    MixedWeights,
    #[error("non-admissible words survived for a convergent input: {0:?}")]
    UncancelledDivergence(Vec<MzvWord>),
    #[error("step verification failed: {0}")]
    CheckFailed(#[from] CheckFailed),
    #[error("no truncation-consistent derivation found for {0}")]
    NoDerivation(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("the series diverges (some set of rows meets too few units)")]
    DivergentSeries,
    #[error("the word {0} is not admissible")]
    DivergentWord(MzvWord),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} check failed on {mv}: {detail}")]
pub struct CheckFailed {
    pub kind: &'static str,
    pub mv: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestError {
    #[error("rows form a cycle in the root graph")]
    CycleDetected,
}
