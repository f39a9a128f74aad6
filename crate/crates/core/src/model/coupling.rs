use ndarray::{Array2, Axis};

use super::instance::SIMPLEX_INPUT_TOL;
use crate::error::{Error, Result};

/// Total mass of a coupling may deviate from one by at most this much.
pub const COUPLING_MASS_TOL: f64 = 1e-12;

/// A joint probability over characteristics x states (an information policy).
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    joint: Array2<f64>,
}

impl Coupling {
    pub fn new(joint: Array2<f64>) -> Result<Self> {
        if let Some(((i, j), v)) = joint.indexed_iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(if v.is_finite() {
                Error::NegativeProbability {
                    what: "coupling".into(),
                    index: i * joint.ncols() + j,
                    value: *v,
                }
            } else {
                Error::NonFinite {
                    what: "coupling".into(),
                    location: format!("({i}, {j})"),
                }
            });
        }
        let sum = joint.sum();
        if (sum - 1.0).abs() > COUPLING_MASS_TOL {
            return Err(Error::NotOnSimplex {
                what: "coupling".into(),
                sum,
                tolerance: COUPLING_MASS_TOL,
            });
        }
        Ok(Self { joint })
    }

    /// Builds a coupling from rows of a nested vector.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::ShapeMismatch {
                what: "coupling rows".into(),
                expected: m.to_string(),
                found: "ragged rows".into(),
            });
        }
        let joint = Array2::from_shape_fn((n, m), |(i, j)| rows[i][j]);
        Self::new(joint)
    }

    /// Independent coupling `row ⊗ col`.
    pub fn product(row: &[f64], col: &[f64]) -> Result<Self> {
        Self::new(Array2::from_shape_fn((row.len(), col.len()), |(i, j)| row[i] * col[j]))
    }

    pub fn joint(&self) -> &Array2<f64> {
        &self.joint
    }

    pub fn into_joint(self) -> Array2<f64> {
        self.joint
    }

    pub fn shape(&self) -> (usize, usize) {
        self.joint.dim()
    }

    /// Marginal over characteristics.
    pub fn row_marginal(&self) -> Vec<f64> {
        self.joint.sum_axis(Axis(1)).to_vec()
    }

    /// Marginal over states.
    pub fn column_marginal(&self) -> Vec<f64> {
        self.joint.sum_axis(Axis(0)).to_vec()
    }

    /// Conditional choice probabilities `P(ξ|θ)`, one column per state.
    pub fn ccp(&self) -> Result<Array2<f64>> {
        let cols = self.column_marginal();
        if let Some(j) = cols.iter().position(|&c| c <= 0.0) {
            return Err(Error::ZeroMass {
                what: "state".into(),
                index: j,
            });
        }
        let mut out = self.joint.clone();
        for (mut col, c) in out.columns_mut().into_iter().zip(&cols) {
            col /= *c;
        }
        Ok(out)
    }

    /// Max-norm deviation of the state marginal from `mu`.
    pub fn bayes_deviation(&self, mu: &[f64]) -> f64 {
        crate::numerics::max_abs_diff(&self.column_marginal(), mu)
    }

    /// The path point `(1 - eps) self + eps other`.
    pub fn mix(&self, other: &Coupling, eps: f64) -> Result<Coupling> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                what: "coupling".into(),
                expected: format!("{:?}", self.shape()),
                found: format!("{:?}", other.shape()),
            });
        }
        Coupling::new(&self.joint * (1.0 - eps) + &other.joint * eps)
    }
}

/// A strictly positive probability vector over characteristics.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalX {
    weights: Vec<f64>,
}

impl MarginalX {
    /// Accepts a strictly positive vector that sums to one within
    /// [`SIMPLEX_INPUT_TOL`], then renormalizes it exactly.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > SIMPLEX_INPUT_TOL {
            return Err(Error::NotOnSimplex {
                what: "marginal".into(),
                sum,
                tolerance: SIMPLEX_INPUT_TOL,
            });
        }
        Self::from_unnormalized(weights)
    }

    /// Normalizes any strictly positive finite vector.
    pub fn from_unnormalized(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyAfterPruning("marginal".into()));
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > 0.0 && v.is_finite()))
        {
            return Err(Error::NonPositiveMarginal { index, value });
        }
        crate::numerics::normalize_in_place(&mut weights);
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    /// `(1 - eps) self + eps δ_x`.
    pub fn toward_vertex(&self, x: usize, eps: f64) -> Result<MarginalX> {
        if x >= self.len() {
            return Err(Error::InvalidParameter(format!(
                "characteristic index {x} out of range for {} characteristics",
                self.len()
            )));
        }
        let mut w: Vec<f64> = self.weights.iter().map(|v| (1.0 - eps) * v).collect();
        w[x] += eps;
        MarginalX::from_unnormalized(w)
    }

    pub(crate) fn from_normalized_unchecked(weights: Vec<f64>) -> Self {
        Self { weights }
    }
}

impl AsRef<[f64]> for MarginalX {
    fn as_ref(&self) -> &[f64] {
        &self.weights
    }
}
