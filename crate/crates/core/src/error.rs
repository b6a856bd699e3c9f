use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("valuation matrix has no agents")]
    EmptyMatrix,
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedMatrix { row: usize, expected: usize, found: usize },
    #[error("agent {agent}, item {item}: value {value} has the wrong sign for {kind}")]
    SignViolation {
        agent: usize,
        item: usize,
        value: String,
        kind: &'static str,
    },
    #[error("allocation does not match the instance: {0}")]
    ShapeMismatch(String),
    #[error("search space {size} exceeds the oracle cap {cap}")]
    TooLarge { size: String, cap: u64 },
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
    #[error("precondition not met: {0}")]
    PreconditionUnmet(String),
    #[error("empty group")]
    EmptyGroup,
    #[error("step references agent or item that is not live: {0}")]
    DanglingReference(String),
    #[error("c must be non-negative, got {0}")]
    NegativeC(i64),
    #[error("c = {c} is outside the supported range {range}")]
    COutOfRange { c: i64, range: &'static str },
    #[error("instances with exactly three agents and n + 6 goods are excluded")]
    NEqualsThree,
    #[error("at least 8 agents are required, got {0}")]
    TooFewAgents(usize),
    #[error("parse error: {0}")]
    Parse(String),
}
