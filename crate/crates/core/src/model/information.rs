//! Information costs and the decision-maker's objective.
//!
//! Entropic quantities are in nats. Costs and objective values are reported
//! in the original utility units, i.e. multiplied back by `lambda`.

use super::coupling::Coupling;
use super::instance::ProblemInstance;
use crate::error::{Error, Result};
use crate::numerics::xlogx_over_y;

/// `D_KL(p ‖ q)` in nats; `f64::INFINITY` when `p` is not absolutely
/// continuous with respect to `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            what: "kl_divergence".into(),
            expected: p.len().to_string(),
            found: q.len().to_string(),
        });
    }
    for (what, v) in [("p", p), ("q", q)] {
        if let Some((index, &value)) = v.iter().enumerate().find(|(_, &x)| x < 0.0) {
            return Err(Error::NegativeProbability {
                what: what.into(),
                index,
                value,
            });
        }
    }
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 && b == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += xlogx_over_y(a, b);
    }
    Ok(total)
}

/// Shannon mutual information between characteristic and state under `p`.
pub fn mutual_information(p: &Coupling) -> f64 {
    let rows = p.row_marginal();
    let cols = p.column_marginal();
    let mut total = 0.0;
    for ((i, j), &v) in p.joint().indexed_iter() {
        total += xlogx_over_y(v, rows[i] * cols[j]);
    }
    total.max(0.0)
}

pub(crate) fn ensure_shape(p: &Coupling, inst: &ProblemInstance) -> Result<()> {
    if p.shape() != (inst.n(), inst.m()) {
        return Err(Error::ShapeMismatch {
            what: "coupling (infeasible for this instance)".into(),
            expected: format!("{:?}", (inst.n(), inst.m())),
            found: format!("{:?}", p.shape()),
        });
    }
    Ok(())
}

/// The four algebraically equivalent ways of writing the information cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostForm {
    /// `αλ E_P[D(P(ξ|θ)‖φ)] + (1-α)λ E_P[D(P(θ|ξ)‖μ)]`
    ConditionalDivergences,
    /// `αλ E_P[D(P(ξ|θ)‖φ)] + (1-α)λ I_P`
    ConditionalAndMutual,
    /// `αλ (D(P|ξ‖φ) + I_P) + (1-α)λ I_P`
    InformationAboutEach,
    /// `αλ D(P|ξ‖φ) + λ I_P`, vertical plus horizontal information.
    VerticalHorizontal,
}

impl CostForm {
    pub const ALL: [CostForm; 4] = [
        CostForm::ConditionalDivergences,
        CostForm::ConditionalAndMutual,
        CostForm::InformationAboutEach,
        CostForm::VerticalHorizontal,
    ];
}

/// Expected divergence of the conditional over characteristics from `phi`.
fn expected_choice_divergence(p: &Coupling, inst: &ProblemInstance) -> Result<f64> {
    let cols = p.column_marginal();
    let mut total = 0.0;
    for (j, col) in p.joint().columns().into_iter().enumerate() {
        if cols[j] == 0.0 {
            continue;
        }
        let cond: Vec<f64> = col.iter().map(|v| v / cols[j]).collect();
        total += cols[j] * kl_divergence(&cond, inst.phi())?;
    }
    Ok(total)
}

/// Expected divergence of the posterior over states from `mu`.
fn expected_state_divergence(p: &Coupling, inst: &ProblemInstance) -> Result<f64> {
    let rows = p.row_marginal();
    let mut total = 0.0;
    for (i, row) in p.joint().rows().into_iter().enumerate() {
        if rows[i] == 0.0 {
            continue;
        }
        let cond: Vec<f64> = row.iter().map(|v| v / rows[i]).collect();
        total += rows[i] * kl_divergence(&cond, inst.mu())?;
    }
    Ok(total)
}

/// Information cost written in one of its equivalent forms.
pub fn kappa_cost_form(p: &Coupling, inst: &ProblemInstance, form: CostForm) -> Result<f64> {
    ensure_shape(p, inst)?;
    let (alpha, lambda) = (inst.alpha(), inst.lambda());
    let value = match form {
        CostForm::ConditionalDivergences => {
            alpha * expected_choice_divergence(p, inst)?
                + (1.0 - alpha) * expected_state_divergence(p, inst)?
        }
        CostForm::ConditionalAndMutual => {
            alpha * expected_choice_divergence(p, inst)? + (1.0 - alpha) * mutual_information(p)
        }
        CostForm::InformationAboutEach => {
            let info = mutual_information(p);
            alpha * (kl_divergence(&p.row_marginal(), inst.phi())? + info) + (1.0 - alpha) * info
        }
        CostForm::VerticalHorizontal => {
            alpha * kl_divergence(&p.row_marginal(), inst.phi())? + mutual_information(p)
        }
    };
    Ok(lambda * value)
}

/// `κ(P) = αλ D(P|ξ‖φ) + λ I_P`.
pub fn kappa_cost(p: &Coupling, inst: &ProblemInstance) -> Result<f64> {
    kappa_cost_form(p, inst, CostForm::VerticalHorizontal)
}

/// `E_P[u]` in utility units.
pub fn expected_utility(p: &Coupling, inst: &ProblemInstance) -> Result<f64> {
    ensure_shape(p, inst)?;
    Ok(inst.lambda() * (p.joint() * inst.utility()).sum())
}

/// `U(P) = E_P[u] - κ(P)`.
pub fn objective_u(p: &Coupling, inst: &ProblemInstance) -> Result<f64> {
    Ok(expected_utility(p, inst)? - kappa_cost(p, inst)?)
}
