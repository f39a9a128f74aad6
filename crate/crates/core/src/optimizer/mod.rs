//! Outer problem: maximize the Jensen envelope
//! `f(ν) = λ Σ_θ μ(θ) log Z(θ;ν)` over strictly positive marginals, then
//! assemble the optimal policy from the maximizer.
//!
//! `f` is strictly concave for `α ∈ (0,1)`, upper-bounds `U(P)` at
//! `ν = P|ξ`, and the two maxima coincide.

mod oracle;

pub use oracle::{brute_force_oracle, oracle_ascent, OracleOptions, OracleResult, ORACLE_MAX_CELLS};

use ndarray::Array2;

use crate::bridge::{sinkhorn_solve, BridgeSummary, SinkhornOptions};
use crate::error::{Error, Result};
use crate::model::logit::{check_len, log_mnl_weights, log_partition_raw};
use crate::model::{coupling_from_marginal, mnl_ccp, objective_u, Coupling, MarginalX, ProblemInstance};
use crate::numerics::log_sum_exp;

/// `f(ν)` for any nonnegative weight vector.
pub(crate) fn f_value_raw(nu: &[f64], inst: &ProblemInstance) -> f64 {
    let lz = log_partition_raw(nu, inst);
    inst.lambda() * lz.iter().zip(inst.mu()).map(|(z, m)| z * m).sum::<f64>()
}

/// Jensen envelope `f(ν) = λ E_μ[log Z(θ;ν)]` in utility units.
pub fn f_value(nu: &MarginalX, inst: &ProblemInstance) -> Result<f64> {
    check_len(nu.weights(), inst)?;
    Ok(f_value_raw(nu.weights(), inst))
}

/// `log g(ξ;ν)` given precomputed `log Z(·;ν)`.
fn log_foc(nu: &[f64], log_z: &[f64], inst: &ProblemInstance) -> Vec<f64> {
    let lw = log_mnl_weights(nu, inst);
    let w = inst.utility();
    let lmu = inst.log_mu();
    (0..inst.n())
        .map(|i| {
            let row = w.row(i);
            lw[i] - nu[i].ln() + log_sum_exp((0..inst.m()).map(|j| lmu[j] + row[j] - log_z[j]))
        })
        .collect()
}

/// First-order multiplier
/// `g(ξ;ν) = Σ_θ μ(θ) φ(ξ)^α ν(ξ)^{-α} e^{u(ξ,θ)/λ} / Z(θ;ν)`.
///
/// `Σ ν g = 1` for every `ν`, and `g ≡ 1` exactly at the maximizer of `f`.
pub fn foc_multiplier(nu: &MarginalX, inst: &ProblemInstance) -> Result<Vec<f64>> {
    check_len(nu.weights(), inst)?;
    let lz = log_partition_raw(nu.weights(), inst);
    Ok(log_foc(nu.weights(), &lz, inst).into_iter().map(f64::exp).collect())
}

fn foc_residual_from_log(log_g: &[f64]) -> f64 {
    log_g.iter().map(|l| l.exp_m1().abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterOptions {
    /// Stop once `max |g - 1|` is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Exponent `η ∈ (0,1]` on the multiplicative step.
    pub damping: f64,
    /// Starting marginal; `φ` when absent.
    pub start: Option<MarginalX>,
}

impl Default for OuterOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            damping: 1.0,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterResult {
    pub nu: MarginalX,
    pub f_value: f64,
    pub foc_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Row marginal of the closed-form coupling when `α = 1`.
fn maxwell_boltzmann_marginal(inst: &ProblemInstance) -> MarginalX {
    let ccp = crate::model::logit::mnl_ccp_raw(inst.phi(), inst);
    let nu: Vec<f64> = ccp
        .rows()
        .into_iter()
        .map(|r| r.iter().zip(inst.mu()).map(|(c, m)| c * m).sum())
        .collect();
    MarginalX::from_unnormalized(nu).expect("logit probabilities are positive")
}

/// Maximizes `f` by the damped multiplicative fixed point
/// `ν ← normalize(ν · g(·;ν)^η)`.
///
/// A step that lowers `f` is retried with `η` halved. With `α = 1`, `f` does
/// not depend on `ν` and the marginal of the Maxwell-Boltzmann coupling is
/// returned directly.
pub fn outer_solve(inst: &ProblemInstance, options: &OuterOptions) -> Result<OuterResult> {
    if options.tol.is_nan() || options.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", options.tol)));
    }
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping must lie in (0, 1], got {}",
            options.damping
        )));
    }
    if let Some(start) = &options.start {
        check_len(start.weights(), inst)?;
    }

    if inst.alpha() >= 1.0 {
        let nu = maxwell_boltzmann_marginal(inst);
        let lz = log_partition_raw(nu.weights(), inst);
        let foc = foc_residual_from_log(&log_foc(nu.weights(), &lz, inst));
        return Ok(OuterResult {
            f_value: f_value_raw(nu.weights(), inst),
            nu,
            foc_residual: foc,
            iterations: 0,
            converged: foc <= options.tol,
        });
    }

    let mut nu: Vec<f64> = match &options.start {
        Some(s) => s.weights().to_vec(),
        None => inst.phi().to_vec(),
    };
    let mut log_z = log_partition_raw(&nu, inst);
    let objective = |lz: &[f64]| lz.iter().zip(inst.mu()).map(|(z, m)| z * m).sum::<f64>();
    let mut f = objective(&log_z);
    let mut foc = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    'outer: while iterations < options.max_iter {
        iterations += 1;
        let log_g = log_foc(&nu, &log_z, inst);
        foc = foc_residual_from_log(&log_g);
        if foc <= options.tol {
            converged = true;
            break;
        }
        let mut eta = options.damping;
        loop {
            let logits: Vec<f64> = nu.iter().zip(&log_g).map(|(v, lg)| v.ln() + eta * lg).collect();
            let norm = log_sum_exp(logits.iter().copied());
            let candidate: Vec<f64> = logits.iter().map(|l| (l - norm).exp()).collect();
            let cand_z = log_partition_raw(&candidate, inst);
            let cand_f = objective(&cand_z);
            if cand_f >= f - 1e-15 * f.abs().max(1.0) {
                nu = candidate;
                log_z = cand_z;
                f = cand_f;
                break;
            }
            eta *= 0.5;
            if eta < 1e-12 {
                // No ascent direction left at working precision.
                break 'outer;
            }
        }
    }

    Ok(OuterResult {
        nu: MarginalX::from_unnormalized(nu)?,
        f_value: inst.lambda() * f,
        foc_residual: foc,
        iterations,
        converged,
    })
}

/// How the optimal coupling is built from the optimal marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Assembly {
    /// `P = μ(θ) · mnl_ccp(ν*)`, i.e. potentials `a ≡ 0`, `b = log Z`.
    #[default]
    ClosedForm,
    /// Sinkhorn between `ν*` and `μ`.
    Bridge,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveOptions {
    pub outer: OuterOptions,
    pub inner: SinkhornOptions,
    pub assembly: Assembly,
}

impl SolveOptions {
    pub fn with_tolerances(outer_tol: f64, inner_tol: f64) -> Self {
        Self {
            outer: OuterOptions {
                tol: outer_tol,
                ..OuterOptions::default()
            },
            inner: SinkhornOptions {
                tol: inner_tol,
                ..SinkhornOptions::default()
            },
            assembly: Assembly::ClosedForm,
        }
    }
}

/// The unique optimal information policy and how it was certified.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub nu_star: MarginalX,
    pub coupling: Coupling,
    /// `P(ξ|θ)`, one column per state.
    pub ccp: Array2<f64>,
    pub u_star: f64,
    pub f_star: f64,
    pub foc_residual: f64,
    /// Max-norm gap between the coupling's row marginal and `nu_star`.
    pub consistency_residual: f64,
    pub outer_iterations: usize,
    pub inner_diagnostics: Vec<BridgeSummary>,
    pub converged: bool,
}

pub fn full_solve(inst: &ProblemInstance, options: &SolveOptions) -> Result<Solution> {
    let outer = outer_solve(inst, &options.outer)?;
    let nu = outer.nu;
    let mut inner_diagnostics = Vec::new();
    let mut inner_ok = true;
    let (coupling, ccp, consistency_residual) = match options.assembly {
        Assembly::ClosedForm => {
            let (coupling, residual) = coupling_from_marginal(&nu, inst)?;
            (coupling, mnl_ccp(&nu, inst)?, residual)
        }
        Assembly::Bridge => {
            let sol = sinkhorn_solve(inst, &nu, &options.inner)?;
            inner_ok = sol.converged;
            inner_diagnostics.push(sol.summary());
            let ccp = sol.coupling.ccp()?;
            let residual = crate::numerics::max_abs_diff(&sol.coupling.row_marginal(), nu.weights());
            (sol.coupling, ccp, residual)
        }
    };
    let u_star = objective_u(&coupling, inst)?;
    let f_star = f_value_raw(nu.weights(), inst);
    let bound = 10.0 * options.outer.tol.max(options.inner.tol) * inst.lambda().max(1.0);
    let converged = outer.converged
        && inner_ok
        && (f_star - u_star).abs() <= bound
        && consistency_residual <= 10.0 * options.outer.tol.max(options.inner.tol);
    Ok(Solution {
        nu_star: nu,
        coupling,
        ccp,
        u_star,
        f_star,
        foc_residual: outer.foc_residual,
        consistency_residual,
        outer_iterations: outer.iterations,
        inner_diagnostics,
        converged,
    })
}
