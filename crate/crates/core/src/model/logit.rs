//! Weighted multinomial logit: partition function, choice probabilities and
//! the Bayes-plausible coupling they induce.

use ndarray::Array2;

use super::coupling::{Coupling, MarginalX};
use super::instance::ProblemInstance;
use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;

pub(crate) fn check_len(nu: &[f64], inst: &ProblemInstance) -> Result<()> {
    if nu.len() != inst.n() {
        return Err(Error::ShapeMismatch {
            what: "marginal".into(),
            expected: inst.n().to_string(),
            found: nu.len().to_string(),
        });
    }
    Ok(())
}

/// `log(φ(ξ)^α ν(ξ)^(1-α))`, with `ν(ξ) = 0` giving `-inf` when `α < 1`.
pub(crate) fn log_mnl_weights(nu: &[f64], inst: &ProblemInstance) -> Vec<f64> {
    let alpha = inst.alpha();
    nu.iter()
        .zip(inst.log_phi())
        .map(|(&v, &lp)| {
            if alpha < 1.0 {
                alpha * lp + (1.0 - alpha) * v.ln()
            } else {
                lp
            }
        })
        .collect()
}

/// `log Z(θ;ν)` for every state, for any nonnegative `ν`.
pub(crate) fn log_partition_raw(nu: &[f64], inst: &ProblemInstance) -> Vec<f64> {
    let lw = log_mnl_weights(nu, inst);
    let w = inst.utility();
    (0..inst.m())
        .map(|j| log_sum_exp((0..inst.n()).map(|i| lw[i] + w[[i, j]])))
        .collect()
}

/// `log Z(θ;ν)` computed with a max-shifted exponential sum.
pub fn log_partition(nu: &MarginalX, inst: &ProblemInstance) -> Result<Vec<f64>> {
    check_len(nu.weights(), inst)?;
    Ok(log_partition_raw(nu.weights(), inst))
}

/// `Z(θ;ν) = Σ_ξ φ(ξ)^α ν(ξ)^(1-α) e^{u(ξ,θ)/λ}`.
pub fn partition_z(nu: &MarginalX, inst: &ProblemInstance) -> Result<Vec<f64>> {
    Ok(log_partition(nu, inst)?.into_iter().map(f64::exp).collect())
}

pub(crate) fn mnl_ccp_raw(nu: &[f64], inst: &ProblemInstance) -> Array2<f64> {
    let lw = log_mnl_weights(nu, inst);
    let lz = log_partition_raw(nu, inst);
    let w = inst.utility();
    Array2::from_shape_fn((inst.n(), inst.m()), |(i, j)| (lw[i] + w[[i, j]] - lz[j]).exp())
}

/// `P(ξ|θ) = φ(ξ)^α ν(ξ)^(1-α) e^{u(ξ,θ)/λ} / Z(θ;ν)`, one column per state.
pub fn mnl_ccp(nu: &MarginalX, inst: &ProblemInstance) -> Result<Array2<f64>> {
    check_len(nu.weights(), inst)?;
    Ok(mnl_ccp_raw(nu.weights(), inst))
}

/// `μ(θ) P(ξ|θ)` together with the max-norm gap between its row marginal and
/// `ν`. The gap vanishes exactly when `ν` satisfies the outer first-order
/// condition.
pub fn coupling_from_marginal(nu: &MarginalX, inst: &ProblemInstance) -> Result<(Coupling, f64)> {
    let mut joint = mnl_ccp(nu, inst)?;
    for (mut col, &m) in joint.columns_mut().into_iter().zip(inst.mu()) {
        col *= m;
    }
    let coupling = Coupling::new(joint)?;
    let residual = crate::numerics::max_abs_diff(&coupling.row_marginal(), nu.weights());
    Ok((coupling, residual))
}
