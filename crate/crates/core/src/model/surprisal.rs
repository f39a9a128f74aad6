use ndarray::Array2;

use super::coupling::Coupling;
use super::information::ensure_shape;
use super::instance::ProblemInstance;
use crate::error::{Error, Result};

/// `Y(ξ,θ;P) = u/λ - α log(ν(ξ)/φ(ξ)) - log(P(ξ|θ)/ν(ξ))` where `ν` is the
/// characteristic marginal of `P`. Entries off the support of `P` are
/// undefined and stored as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SurprisalMatrix {
    values: Array2<f64>,
    row_mass: Vec<f64>,
}

impl SurprisalMatrix {
    /// Raw values; NaN marks undefined entries.
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn is_defined(&self, row: usize, col: usize) -> bool {
        !self.values[[row, col]].is_nan()
    }

    pub fn get(&self, row: usize, col: usize) -> Result<f64> {
        if self.row_mass[row] == 0.0 {
            return Err(Error::ZeroMass {
                what: "characteristic".into(),
                index: row,
            });
        }
        let v = self.values[[row, col]];
        if v.is_nan() {
            return Err(Error::UndefinedSurprisal { row, col });
        }
        Ok(v)
    }

    /// `Σ w(ξ,θ) Y(ξ,θ)`; every entry with positive weight must be defined.
    pub fn expectation(&self, weights: &Coupling) -> Result<f64> {
        if weights.shape() != self.values.dim() {
            return Err(Error::ShapeMismatch {
                what: "weights".into(),
                expected: format!("{:?}", self.values.dim()),
                found: format!("{:?}", weights.shape()),
            });
        }
        let mut total = 0.0;
        for ((i, j), &w) in weights.joint().indexed_iter() {
            if w > 0.0 {
                total += w * self.get(i, j)?;
            }
        }
        Ok(total)
    }
}

pub fn surprisal_y(p: &Coupling, inst: &ProblemInstance) -> Result<SurprisalMatrix> {
    ensure_shape(p, inst)?;
    let rows = p.row_marginal();
    let cols = p.column_marginal();
    let alpha = inst.alpha();
    let values = Array2::from_shape_fn(p.shape(), |(i, j)| {
        let mass = p.joint()[[i, j]];
        if rows[i] <= 0.0 || mass <= 0.0 {
            return f64::NAN;
        }
        // log(P(ξ|θ) / ν(ξ)) = log(P(ξ,θ) / (ν(ξ) P|θ(θ)))
        inst.utility()[[i, j]]
            - alpha * (rows[i].ln() - inst.log_phi()[i])
            - (mass.ln() - rows[i].ln() - cols[j].ln())
    });
    Ok(SurprisalMatrix {
        values,
        row_mass: rows,
    })
}
