use ndarray::Array2;

use super::dual::{duality_gap, value_from_potentials};
use crate::error::{Error, Result};
use crate::model::logit::check_len;
use crate::model::{Coupling, MarginalX, ProblemInstance};
use crate::numerics::log_sum_exp;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    /// Stop once the max-norm marginal residual is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Normalization applied to a pair of potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// No normalization.
    Free,
    /// `Σ ν(ξ) a(ξ) = 0`.
    NuMeanZero,
}

/// Schrödinger potentials in scaled form.
///
/// `a_scaled(ξ) = a(ξ) + α log(ν(ξ)/φ(ξ))` absorbs the characteristic-only
/// part of the transport cost, so the coupling is
/// `P(ξ,θ) = ν(ξ) μ(θ) exp(u(ξ,θ)/λ - a_scaled(ξ) - b(θ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub a_scaled: Vec<f64>,
    pub b: Vec<f64>,
    pub gauge: Gauge,
}

impl Potentials {
    /// The unscaled characteristic potential `a(ξ)`.
    pub fn standard_a(&self, nu: &MarginalX, inst: &ProblemInstance) -> Vec<f64> {
        let alpha = inst.alpha();
        self.a_scaled
            .iter()
            .zip(nu.weights())
            .zip(inst.log_phi())
            .map(|((&a, &v), &lp)| a - alpha * (v.ln() - lp))
            .collect()
    }

    /// Translate `(a, b)` to `(a + c, b - c)`.
    pub fn shifted(&self, c: f64) -> Potentials {
        Potentials {
            a_scaled: self.a_scaled.iter().map(|a| a + c).collect(),
            b: self.b.iter().map(|b| b - c).collect(),
            gauge: Gauge::Free,
        }
    }

    /// Shift so that `Σ ν a = 0`.
    pub fn gauge_fixed(&self, nu: &MarginalX, inst: &ProblemInstance) -> Potentials {
        let a = self.standard_a(nu, inst);
        let c: f64 = a.iter().zip(nu.weights()).map(|(a, v)| a * v).sum();
        let mut out = self.shifted(-c);
        out.gauge = Gauge::NuMeanZero;
        out
    }

    /// The coupling these potentials induce between `ν` and `μ`.
    pub fn coupling(&self, nu: &MarginalX, inst: &ProblemInstance) -> Array2<f64> {
        let w = inst.utility();
        let (lnu, lmu) = (log_vec(nu.weights()), inst.log_mu());
        Array2::from_shape_fn((inst.n(), inst.m()), |(i, j)| {
            (lnu[i] + lmu[j] + w[[i, j]] - self.a_scaled[i] - self.b[j]).exp()
        })
    }
}

pub(crate) fn log_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.ln()).collect()
}

/// Per-solve summary kept by callers that run many bridge solves.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeSummary {
    pub iterations: usize,
    pub marginal_residual: f64,
    pub duality_gap: f64,
    pub value_v: f64,
    pub converged: bool,
}

/// Result of one Schrödinger-bridge solve.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeSolution {
    pub nu: MarginalX,
    pub potentials: Potentials,
    pub coupling: Coupling,
    /// Constrained value `V(ν)` in utility units.
    pub value_v: f64,
    /// Max-norm deviation of the coupling marginals from `ν` and `μ`.
    pub marginal_residual: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Row-marginal residual after every sweep. Not monotone in general.
    pub residual_history: Vec<f64>,
    /// `max log(r/ν) - min log(r/ν)` after every sweep, with `r` the row
    /// marginal. This Hilbert-metric distance never increases.
    pub ratio_spread_history: Vec<f64>,
}

impl BridgeSolution {
    pub fn summary(&self) -> BridgeSummary {
        BridgeSummary {
            iterations: self.iterations,
            marginal_residual: self.marginal_residual,
            duality_gap: self.duality_gap,
            value_v: self.value_v,
            converged: self.converged,
        }
    }
}

/// Maximizes `U` over couplings with marginals `ν` and `μ` by log-domain
/// Sinkhorn iteration on the scaled potentials.
///
/// Each sweep sets `b(θ) = log Σ_ξ ν e^{u/λ - ã}` (which makes the state
/// marginal exact), then measures the characteristic marginal and, unless
/// converged, sets `ã(ξ) = log Σ_θ μ e^{u/λ - b}`. Running out of iterations
/// is not an error: the last iterate comes back with `converged = false`.
pub fn sinkhorn_solve(inst: &ProblemInstance, nu: &MarginalX, options: &SinkhornOptions) -> Result<BridgeSolution> {
    check_len(nu.weights(), inst)?;
    if options.tol.is_nan() || options.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", options.tol)));
    }
    if options.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    let (n, m) = (inst.n(), inst.m());
    let w = inst.utility();
    let lnu = log_vec(nu.weights());
    let lmu = inst.log_mu();
    // Column-major copy for the state update.
    let wt = w.t().as_standard_layout().into_owned();

    let mut a_scaled = vec![0.0; n];
    let mut b = vec![0.0; m];
    let mut next_a = vec![0.0; n];
    let mut history = Vec::new();
    let mut spreads = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iter {
        iterations += 1;
        for (j, bj) in b.iter_mut().enumerate() {
            let col = wt.row(j);
            *bj = log_sum_exp((0..n).map(|i| lnu[i] + col[i] - a_scaled[i]));
        }
        let mut residual: f64 = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, na) in next_a.iter_mut().enumerate() {
            let row = w.row(i);
            *na = log_sum_exp((0..m).map(|j| lmu[j] + row[j] - b[j]));
            let log_ratio = *na - a_scaled[i];
            lo = lo.min(log_ratio);
            hi = hi.max(log_ratio);
            let row_mass = (lnu[i] + log_ratio).exp();
            residual = residual.max((row_mass - nu.weights()[i]).abs());
        }
        history.push(residual);
        spreads.push(hi - lo);
        if residual <= options.tol {
            converged = true;
            break;
        }
        if iterations == options.max_iter {
            break;
        }
        std::mem::swap(&mut a_scaled, &mut next_a);
    }

    let potentials = Potentials {
        a_scaled,
        b,
        gauge: Gauge::Free,
    }
    .gauge_fixed(nu, inst);
    let coupling = Coupling::new(potentials.coupling(nu, inst))?;
    let marginal_residual = crate::numerics::max_abs_diff(&coupling.row_marginal(), nu.weights())
        .max(coupling.bayes_deviation(inst.mu()));
    let value_v = value_from_potentials(&potentials, nu, inst);
    let mut solution = BridgeSolution {
        nu: nu.clone(),
        potentials,
        coupling,
        value_v,
        marginal_residual,
        duality_gap: 0.0,
        iterations,
        converged,
        residual_history: history,
        ratio_spread_history: spreads,
    };
    solution.duality_gap = duality_gap(&solution, inst)?;
    Ok(solution)
}
