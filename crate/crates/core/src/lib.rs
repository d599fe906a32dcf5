//! Zonotopic set computations.
//!
//! Intervals, strips, zonotopes, constrained zonotopes, line zonotopes and
//! H-polytopes with their set algebra and LP-backed queries; complexity
//! reduction; factorable functions with polyhedral relaxations; nonlinear
//! set propagation; set-based state estimation and active fault diagnosis
//! for discrete-time systems with bounded uncertainty.

pub mod error;
pub mod estimation;
pub mod faultdiag;
pub mod funcdag;
pub mod interval;
mod linalg;
pub mod polyrelax;
pub mod propagate;
pub mod reduction;
pub mod scenarios;
mod serde_util;
pub mod setalgebra;
pub mod setqueries;
pub mod setrep;
pub mod system;

pub use error::{Error, Result};
pub use interval::{Interval, IntervalMatrix, IntervalVector};
pub use setrep::{ConZonotope, HPolytope, LineZonotope, SetKind, Strip, ZonoSet, Zonotope};
