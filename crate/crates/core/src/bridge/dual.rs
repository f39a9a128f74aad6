//! Dual side of the constrained problem: Schrödinger equations, the dual
//! objective, the duality-gap certificate and the envelope derivative of
//! `V`.
//!
//! With `ν` fixed, `-U(P) = ∫ c dP + D_KL(P ‖ ν⊗μ)` where the transport cost
//! is `c(ξ,θ) = -u(ξ,θ)/λ + α log(dν/dφ)(ξ)`. The entropic term enters with a
//! plus sign, which is what makes the inner problem a standard entropic
//! transport between `ν` and `μ`.

use ndarray::Array2;

use super::sinkhorn::{log_vec, sinkhorn_solve, BridgeSolution, Potentials, SinkhornOptions};
use crate::error::{Error, Result};
use crate::model::logit::check_len;
use crate::model::{objective_u, Coupling, MarginalX, ProblemInstance};
use crate::numerics::log_sum_exp;

fn check_potentials(pot: &Potentials, inst: &ProblemInstance) -> Result<()> {
    if pot.a_scaled.len() != inst.n() || pot.b.len() != inst.m() {
        return Err(Error::ShapeMismatch {
            what: "potentials".into(),
            expected: format!("({}, {})", inst.n(), inst.m()),
            found: format!("({}, {})", pot.a_scaled.len(), pot.b.len()),
        });
    }
    Ok(())
}

/// Largest log-scale violation of the two Schrödinger equations
///
/// `e^{a(ξ)} (dν/dφ)^α = Σ_θ e^{u/λ - b} μ` and
/// `e^{b(θ)} = Σ_ξ e^{u/λ - a} (dν/dφ)^{-α} ν`.
pub fn schrodinger_residual(pot: &Potentials, nu: &MarginalX, inst: &ProblemInstance) -> Result<f64> {
    check_len(nu.weights(), inst)?;
    check_potentials(pot, inst)?;
    let w = inst.utility();
    let lnu = log_vec(nu.weights());
    let lmu = inst.log_mu();
    let mut worst: f64 = 0.0;
    for i in 0..inst.n() {
        // log LHS = a + α log(ν/φ) = a_scaled
        let rhs = log_sum_exp((0..inst.m()).map(|j| lmu[j] + w[[i, j]] - pot.b[j]));
        worst = worst.max((pot.a_scaled[i] - rhs).abs());
    }
    for j in 0..inst.m() {
        let rhs = log_sum_exp((0..inst.n()).map(|i| lnu[i] + w[[i, j]] - pot.a_scaled[i]));
        worst = worst.max((pot.b[j] - rhs).abs());
    }
    Ok(worst)
}

/// `λ (Σ ν a + Σ μ b)`: the constrained value when the potentials are exact.
pub(crate) fn value_from_potentials(pot: &Potentials, nu: &MarginalX, inst: &ProblemInstance) -> f64 {
    let a = pot.standard_a(nu, inst);
    let ea: f64 = a.iter().zip(nu.weights()).map(|(a, v)| a * v).sum();
    let eb: f64 = pot.b.iter().zip(inst.mu()).map(|(b, m)| b * m).sum();
    inst.lambda() * (ea + eb)
}

/// Dual objective
/// `Σ a ν + Σ b μ + Σ Σ e^{u/λ - a - b} φ^α ν^{1-α} μ - 1`, in utility
/// units. Upper-bounds `V(ν)` for any potentials and equals it at the exact
/// ones.
pub fn dual_value(pot: &Potentials, nu: &MarginalX, inst: &ProblemInstance) -> Result<f64> {
    check_len(nu.weights(), inst)?;
    check_potentials(pot, inst)?;
    let w = inst.utility();
    let lnu = log_vec(nu.weights());
    let lmu = inst.log_mu();
    // e^{-a} φ^α ν^{1-α} = e^{-a_scaled} ν
    let log_mass = log_sum_exp(
        (0..inst.n()).flat_map(|i| (0..inst.m()).map(move |j| (i, j))).map(|(i, j)| {
            lnu[i] + lmu[j] + w[[i, j]] - pot.a_scaled[i] - pot.b[j]
        }),
    );
    let linear = value_from_potentials(pot, nu, inst) / inst.lambda();
    Ok(inst.lambda() * (linear + log_mass.exp() - 1.0))
}

/// Projects a nonnegative matrix onto the couplings with marginals exactly
/// `row` and `col`: scale rows down, scale columns down, then spread the
/// leftover mass as a rank-one correction.
pub fn round_to_marginals(joint: &Array2<f64>, row: &[f64], col: &[f64]) -> Result<Coupling> {
    let mut x = joint.clone();
    for (mut r, &target) in x.rows_mut().into_iter().zip(row) {
        let s = r.sum();
        if s > target {
            r *= target / s;
        }
    }
    for (mut c, &target) in x.columns_mut().into_iter().zip(col) {
        let s = c.sum();
        if s > target {
            c *= target / s;
        }
    }
    let err_r: Vec<f64> = x.rows().into_iter().zip(row).map(|(r, &t)| (t - r.sum()).max(0.0)).collect();
    let err_c: Vec<f64> = x.columns().into_iter().zip(col).map(|(c, &t)| (t - c.sum()).max(0.0)).collect();
    let total: f64 = err_r.iter().sum();
    if total > 0.0 {
        for ((i, j), v) in x.indexed_iter_mut() {
            *v += err_r[i] * err_c[j] / total;
        }
    }
    Coupling::new(x)
}

/// Dual value minus the primal objective of the solution's coupling, after
/// that coupling is rounded onto the exact marginals `(ν, μ)`. Nonnegative
/// by weak duality up to floating-point error.
pub fn duality_gap(sol: &BridgeSolution, inst: &ProblemInstance) -> Result<f64> {
    let feasible = round_to_marginals(sol.coupling.joint(), sol.nu.weights(), inst.mu())?;
    Ok(dual_value(&sol.potentials, &sol.nu, inst)? - objective_u(&feasible, inst)?)
}

/// `V(ν)` from a converged bridge solve; non-convergence is an error.
pub fn constrained_value_v(nu: &MarginalX, inst: &ProblemInstance, options: &SinkhornOptions) -> Result<f64> {
    let sol = sinkhorn_solve(inst, nu, options)?;
    if !sol.converged {
        return Err(Error::NotConverged {
            what: "Sinkhorn".into(),
            iterations: sol.iterations,
            residual: sol.marginal_residual,
        });
    }
    Ok(sol.value_v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeDerivative {
    /// `[V((1-ε)ν + ε δ_x) - V(ν)] / ε`
    pub finite_difference: f64,
    /// `λ (a_ν(x) - Σ a_ν ν)`
    pub potential_prediction: f64,
}

/// Compares the forward difference of `V` toward the vertex `δ_x` with the
/// rate predicted by the characteristic potential.
pub fn envelope_derivative(
    nu: &MarginalX,
    x: usize,
    inst: &ProblemInstance,
    eps: f64,
    options: &SinkhornOptions,
) -> Result<EnvelopeDerivative> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let moved = nu.toward_vertex(x, eps)?;
    let base = sinkhorn_solve(inst, nu, options)?;
    if !base.converged {
        return Err(Error::NotConverged {
            what: "Sinkhorn".into(),
            iterations: base.iterations,
            residual: base.marginal_residual,
        });
    }
    let v_moved = constrained_value_v(&moved, inst, options)?;
    let a = base.potentials.standard_a(nu, inst);
    let mean: f64 = a.iter().zip(nu.weights()).map(|(a, v)| a * v).sum();
    Ok(EnvelopeDerivative {
        finite_difference: (v_moved - base.value_v) / eps,
        potential_prediction: inst.lambda() * (a[x] - mean),
    })
}
