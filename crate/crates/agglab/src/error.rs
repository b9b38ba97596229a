use thiserror::Error;

/// Crate-wide error type. Variants mirror the precondition failures of the
/// public operations rather than internal states.
#[derive(Debug, Error)]
pub enum Error {
    #[error("agent {agent} out of range 1..={n}")]
    AgentOutOfRange { agent: usize, n: usize },
    #[error("agent count {n} out of range 1..={max}")]
    AgentCountOutOfRange { n: usize, max: usize },
    #[error("agent count mismatch: {left} vs {right}")]
    AgentCountMismatch { left: usize, right: usize },
    #[error("universe is empty")]
    EmptyUniverse,
    #[error("full subset enumeration requires n <= {max}, got n = {n}")]
    UniverseTooLarge { n: usize, max: usize },
    #[error("agent list is empty")]
    EmptyAgentList,
    #[error("agent list repeats agent {agent}")]
    RepeatedAgent { agent: usize },
    #[error("variance must be finite and nonnegative, got {variance}")]
    BadVariance { variance: f64 },
    #[error("the point-mass family is the unique zero-variance family")]
    FamilyVarianceMismatch,
    #[error("model must contain at least one positive-variance signal")]
    ZeroTotalVariance,
    #[error("node id {0:?} is reserved for the aggregation target")]
    ReservedNodeId(String),
    #[error("duplicate node id {0:?}")]
    DuplicateNodeId(String),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("missing realization for target {0:?}")]
    MissingRealization(String),
    #[error("dag failed validation:\n{0}")]
    InvalidDag(String),
    #[error("exact complexity search supports at most {max} queries, dag has {count}")]
    ExactSearchTooLarge { count: usize, max: usize },
    #[error("exact complexity search budget exceeded")]
    ExactSearchBudget,
    #[error("mixture probabilities must be nonnegative and sum to 1, got sum {sum}")]
    BadProbabilities { sum: f64 },
    #[error("query budget d={d} out of range 1..={max}")]
    BudgetOutOfRange { d: usize, max: usize },
    #[error("no weight entries for subset size {size}")]
    MissingSizeClass { size: usize },
    #[error("weight on subset {subset} of size {size} outside 1..={d}")]
    WeightSizeOutOfRange { subset: String, size: usize, d: usize },
    #[error("polynomial constraint violated: p(0) = {got}, expected {want}")]
    ConstraintViolated { got: f64, want: f64 },
    #[error("zero or negative variance for agent {agent}")]
    NonPositiveVariance { agent: usize },
    #[error("grid size n={n} out of supported range {min}..={max}")]
    GridOutOfRange { n: usize, min: usize, max: usize },
    #[error("degree d={d} out of supported range 1..={max} (and d < n required)")]
    DegreeOutOfRange { d: usize, max: usize },
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("equioscillation certificate rejected: {0}")]
    Certificate(String),
    #[error("construction self-check failed for {what}: max coefficient deviation {deviation:e}")]
    SelfCheck { what: String, deviation: f64 },
    #[error("singular linear system")]
    SingularSystem,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
