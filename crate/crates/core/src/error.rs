use thiserror::Error;
use zonoset_optim::OptimError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("division by an interval containing zero")]
    DivByIntervalContainingZero,
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("not differentiable: {0}")]
    NonDifferentiable(String),
    #[error("unsupported conversion from {from} to {to}")]
    UnsupportedConversion { from: &'static str, to: &'static str },
    #[error("operation supports only dimension {supported}, got {got}")]
    DimensionUnsupported { supported: usize, got: usize },
    #[error("set is empty")]
    EmptySet,
    #[error("set is unbounded")]
    UnboundedSet,
    #[error("halfspace slack is unbounded over the set")]
    UnboundedSlack,
    #[error("zonotope does not carry lifting metadata")]
    NotALiftedSet,
    #[error("combinatorial budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("zonotope generators do not span the ambient space (rank {rank} < {dim})")]
    DegenerateZonotope { rank: usize, dim: usize },
    #[error("reduction target too small: {0}")]
    TargetTooSmall(String),
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("descriptor system is ill-posed: {0}")]
    IllPosedDescriptor(String),
    #[error("constrained-zonotope descriptor estimation needs an admissible state box")]
    MissingAdmissibleBound,
    #[error("no admissible input separates the output tubes")]
    InfeasibleSeparation,
    #[error("method {method} is not available for {set}")]
    UnsupportedMethod { method: String, set: &'static str },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_shape(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(what()))
    }
}
