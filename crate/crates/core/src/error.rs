use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("no observations")]
    NoObservations,
    #[error("dimension mismatch: expected {expected} outcomes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("outcome {value} out of range for {k} outcomes")]
    OutcomeOutOfRange { value: usize, k: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("budget exhausted")]
    BudgetExhausted,
    #[error("horizon {0} reached: no further observations")]
    HorizonReached(u32),
    #[error("binomial-only formula: got {0} outcomes")]
    BinomialOnly(usize),
    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),
    #[error("state space bound {bound} exceeds ceiling {ceiling}")]
    StateSpaceTooLarge { bound: u128, ceiling: u128 },
    #[error("state not covered by policy: {0}")]
    UnknownState(String),
    #[error("history impossible under all candidates")]
    ImpossibleHistory,
    #[error("unknown candidate label {0}")]
    UnknownLabel(i64),
    #[error("invalid candidate set: {0}")]
    InvalidCandidates(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
