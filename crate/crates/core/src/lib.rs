//! Optimal information acquisition under a Kullback-Leibler plus mutual
//! information cost: model primitives, the Sinkhorn bridge between a fixed
//! characteristic marginal and the state prior, the outer maximization of the
//! Jensen envelope, optimality diagnostics, and entry-based identification of
//! the cost weight `α`.

pub mod bridge;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod numerics;
pub mod optimizer;
pub mod random;
pub mod restrictions;

pub use error::{Error, Result};
pub use model::{Coupling, MarginalX, ProblemInstance, RawInstance};
pub use optimizer::{full_solve, outer_solve, Solution, SolveOptions};
