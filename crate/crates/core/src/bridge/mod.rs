//! Inner problem: maximize `U` with both marginals pinned, solved as an
//! entropic optimal transport (Schrödinger bridge) problem.

mod dual;
mod sinkhorn;

pub use dual::{
    constrained_value_v, dual_value, duality_gap, envelope_derivative, round_to_marginals, schrodinger_residual,
    EnvelopeDerivative,
};
pub use sinkhorn::{
    sinkhorn_solve, BridgeSolution, BridgeSummary, Gauge, Potentials, SinkhornOptions, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
