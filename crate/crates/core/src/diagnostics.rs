//! Numerical checks of the structural properties of an optimal coupling:
//! constant surprisal on each state's support, first-step orthogonality,
//! the Jensen envelope bound, and the logit form of the choice probabilities.

use crate::error::{Error, Result};
use crate::model::logit::mnl_ccp_raw;
use crate::model::{objective_u, surprisal_y, Coupling, MarginalX, ProblemInstance};
use crate::optimizer::{f_value_raw, Solution};

/// Tolerance on `|H|θ - μ|` for perturbation directions.
pub const PLAUSIBILITY_TOL: f64 = 1e-9;

/// Max over states of the `P(·|θ)`-weighted standard deviation of `Y(·,θ;P)`.
pub fn gibbs_check(p: &Coupling, inst: &ProblemInstance) -> Result<f64> {
    let y = surprisal_y(p, inst)?;
    let cols = p.column_marginal();
    let mut worst = 0.0f64;
    for (j, &mass) in cols.iter().enumerate() {
        if mass <= 0.0 {
            return Err(Error::ZeroMass {
                what: "state".into(),
                index: j,
            });
        }
        let column = p.joint().column(j);
        let mut mean = 0.0;
        for (i, &pij) in column.iter().enumerate() {
            if pij > 0.0 {
                mean += pij / mass * y.get(i, j)?;
            }
        }
        let mut var = 0.0;
        for (i, &pij) in column.iter().enumerate() {
            if pij > 0.0 {
                let d = y.get(i, j)? - mean;
                var += pij / mass * d * d;
            }
        }
        worst = worst.max(var.sqrt());
    }
    Ok(worst)
}

fn check_direction(p: &Coupling, h: &Coupling, inst: &ProblemInstance) -> Result<()> {
    crate::model::information::ensure_shape(h, inst)?;
    crate::model::information::ensure_shape(p, inst)?;
    for c in [p, h] {
        let deviation = c.bayes_deviation(inst.mu());
        if deviation.is_nan() || deviation > PLAUSIBILITY_TOL {
            return Err(Error::NotBayesPlausible { deviation });
        }
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("perturbation size must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// `|E_P[Y(·;P_ε)] - E_P[Y(·;P)]| / ε` for each `ε`, where
/// `P_ε = (1-ε)P + εH`. These slopes shrink to zero as `ε ↓ 0`.
pub fn fso_check(p: &Coupling, h: &Coupling, inst: &ProblemInstance, eps: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_direction(p, h, inst)?;
    let base = surprisal_y(p, inst)?.expectation(p)?;
    eps.iter()
        .map(|&e| {
            check_eps(e)?;
            let moved = surprisal_y(&p.mix(h, e)?, inst)?.expectation(p)?;
            Ok((e, (moved - base).abs() / e))
        })
        .collect()
}

/// `λ (E_H[Y(·;P)] - E_P[Y(·;P)])`, the one-sided derivative of `U` along
/// `P → H`.
pub fn first_order_gain(p: &Coupling, h: &Coupling, inst: &ProblemInstance) -> Result<f64> {
    check_direction(p, h, inst)?;
    let y = surprisal_y(p, inst)?;
    Ok(inst.lambda() * (y.expectation(h)? - y.expectation(p)?))
}

/// `|[U(P_ε) - U(P)]/ε - λ(E_H[Y(·;P)] - E_P[Y(·;P)])|`, which is `O(ε)`.
pub fn directional_derivative_check(p: &Coupling, h: &Coupling, inst: &ProblemInstance, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let gain = first_order_gain(p, h, inst)?;
    let moved = objective_u(&p.mix(h, eps)?, inst)?;
    let fd = (moved - objective_u(p, inst)?) / eps;
    Ok((fd - gain).abs())
}

/// `f(P|ξ) - U(P)`; nonnegative, and zero only at the optimum.
pub fn jensen_gap(p: &Coupling, inst: &ProblemInstance) -> Result<f64> {
    crate::model::information::ensure_shape(p, inst)?;
    Ok(f_value_raw(&p.row_marginal(), inst) - objective_u(p, inst)?)
}

/// Max-norm distance between the choice probabilities of `P` and the
/// weighted logit built from its own characteristic marginal.
pub fn mnl_residual(p: &Coupling, inst: &ProblemInstance) -> Result<f64> {
    crate::model::information::ensure_shape(p, inst)?;
    if let Some(i) = p.row_marginal().iter().position(|&r| r <= 0.0) {
        return Err(Error::ZeroMass {
            what: "characteristic".into(),
            index: i,
        });
    }
    let ccp = p.ccp()?;
    let mnl = mnl_ccp_raw(&p.row_marginal(), inst);
    Ok(ccp.iter().zip(mnl.iter()).fold(0.0, |a, (x, y)| a.max((x - y).abs())))
}

/// `(min, max)` of the density `ν/φ`.
pub fn density_bounds(nu: &MarginalX, inst: &ProblemInstance) -> Result<(f64, f64)> {
    crate::model::logit::check_len(nu.weights(), inst)?;
    Ok(nu
        .weights()
        .iter()
        .zip(inst.phi())
        .map(|(v, p)| v / p)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub gibbs: f64,
    /// Slopes must fall by at least this factor across the grid...
    pub fso_decay: f64,
    /// ...unless the smallest one is already below this floor.
    pub fso_floor: f64,
    pub directional: f64,
    pub jensen: f64,
    pub mnl: f64,
    /// `min ν/φ` must exceed this.
    pub density_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            gibbs: 1e-6,
            fso_decay: 5.0,
            fso_floor: 1e-9,
            directional: 1e-2,
            jensen: 1e-8,
            mnl: 1e-8,
            density_min: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassFlags {
    pub gibbs: bool,
    pub fso: bool,
    pub directional: bool,
    pub jensen: bool,
    pub mnl: bool,
    pub density: bool,
}

impl PassFlags {
    pub fn all(&self) -> bool {
        self.gibbs && self.fso && self.directional && self.jensen && self.mnl && self.density
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub gibbs_deviation: f64,
    pub fso_slopes: Vec<(f64, f64)>,
    pub directional_eps: f64,
    pub directional_derivative_error: f64,
    pub jensen_gap: f64,
    pub density_bounds: (f64, f64),
    pub mnl_residual: f64,
    pub thresholds: Thresholds,
    pub passes: PassFlags,
}

pub const DEFAULT_FSO_GRID: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const DEFAULT_DIRECTIONAL_EPS: f64 = 1e-4;

/// Slopes are non-increasing as `ε` shrinks and decay by the required factor.
pub fn fso_passes(slopes: &[(f64, f64)], thresholds: &Thresholds) -> bool {
    let Some((&(_, first), &(_, last))) = slopes.first().zip(slopes.last()) else {
        return false;
    };
    let tiny = |s: f64| s <= thresholds.fso_floor;
    let monotone = slopes.windows(2).all(|w| w[1].1 <= w[0].1 || tiny(w[1].1));
    monotone && (tiny(last) || first >= thresholds.fso_decay * last)
}

/// Runs every check on `P`, perturbing towards `H`.
pub fn diagnose(p: &Coupling, h: &Coupling, inst: &ProblemInstance, thresholds: &Thresholds) -> Result<DiagnosticsReport> {
    let gibbs_deviation = gibbs_check(p, inst)?;
    let fso_slopes = fso_check(p, h, inst, &DEFAULT_FSO_GRID)?;
    let directional_derivative_error = directional_derivative_check(p, h, inst, DEFAULT_DIRECTIONAL_EPS)?;
    let jensen = jensen_gap(p, inst)?;
    let mnl = mnl_residual(p, inst)?;
    let nu = MarginalX::from_unnormalized(p.row_marginal())?;
    let density = density_bounds(&nu, inst)?;
    let scale = inst.lambda().max(1.0);
    let passes = PassFlags {
        gibbs: gibbs_deviation <= thresholds.gibbs,
        fso: fso_passes(&fso_slopes, thresholds),
        directional: directional_derivative_error <= thresholds.directional * scale,
        jensen: jensen.abs() <= thresholds.jensen * scale,
        mnl: mnl <= thresholds.mnl,
        density: density.0 > thresholds.density_min,
    };
    Ok(DiagnosticsReport {
        gibbs_deviation,
        fso_slopes,
        directional_eps: DEFAULT_DIRECTIONAL_EPS,
        directional_derivative_error,
        jensen_gap: jensen,
        density_bounds: density,
        mnl_residual: mnl,
        thresholds: thresholds.clone(),
        passes,
    })
}

/// [`diagnose`] on a solver output, perturbing towards `φ⊗μ`.
pub fn diagnose_solution(solution: &Solution, inst: &ProblemInstance) -> Result<DiagnosticsReport> {
    let h = Coupling::product(inst.phi(), inst.mu())?;
    diagnose(&solution.coupling, &h, inst, &Thresholds::default())
}
