//! Dense linear and mixed-binary programming.
//!
//! Every optimization problem that appears in zonotopic set computations
//! (emptiness, point membership, support functions, rescaling, closest
//! points, input design) is small and dense: at most a few hundred columns.
//! This crate therefore ships a plain bounded-variable tableau simplex and a
//! best-first branch-and-bound on top of it, with no presolve and no sparse
//! factorization.

mod lp;
mod milp;

pub use lp::{solve_lp, LinearProgram, LpOutcome, LpSolution};
pub use milp::{solve_milp, MilpOutcome, MilpSolution, MixedIntegerProgram};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("inconsistent program shape: {0}")]
    Shape(String),
    #[error("simplex failed to converge within {0} pivots")]
    NumericalFailure(usize),
    #[error("branch-and-bound exceeded the node budget of {0}")]
    NodeBudgetExceeded(usize),
    #[error("LP relaxation of the mixed-integer program is unbounded")]
    UnboundedRelaxation,
    #[error("binary variable index {0} out of range")]
    BinaryIndex(usize),
}

pub type Result<T> = std::result::Result<T, OptimError>;
