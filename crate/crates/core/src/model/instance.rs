use std::collections::HashSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability vectors may miss the simplex by this much before rejection.
pub const SIMPLEX_INPUT_TOL: f64 = 1e-9;

/// Unvalidated instance data, laid out exactly like an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub characteristics: Vec<String>,
    pub states: Vec<String>,
    /// Row-major `n x m` utility, one row per characteristic.
    pub utility: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub alpha: f64,
    pub lambda: f64,
}

impl RawInstance {
    /// Builds raw data with generated labels `x1..xn` and `t1..tm`.
    pub fn unlabeled(utility: Vec<Vec<f64>>, phi: Vec<f64>, mu: Vec<f64>, alpha: f64, lambda: f64) -> Self {
        let characteristics = (1..=phi.len()).map(|i| format!("x{i}")).collect();
        let states = (1..=mu.len()).map(|j| format!("t{j}")).collect();
        Self {
            characteristics,
            states,
            utility,
            phi,
            mu,
            alpha,
            lambda,
        }
    }

    pub fn validate(&self) -> Result<ProblemInstance> {
        validate_instance(self)
    }
}

/// A validated decision problem.
///
/// Characteristics with zero prior mass and states with zero prior mass are
/// removed, so `phi` and `mu` are strictly positive. The stored utility is
/// already divided by `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    characteristic_labels: Vec<String>,
    state_labels: Vec<String>,
    utility: Array2<f64>,
    phi: Vec<f64>,
    mu: Vec<f64>,
    log_phi: Vec<f64>,
    log_mu: Vec<f64>,
    alpha: f64,
    lambda: f64,
}

impl ProblemInstance {
    /// Number of characteristics.
    pub fn n(&self) -> usize {
        self.phi.len()
    }

    /// Number of states.
    pub fn m(&self) -> usize {
        self.mu.len()
    }

    pub fn characteristic_labels(&self) -> &[String] {
        &self.characteristic_labels
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    /// Utility in units of `lambda`, i.e. `u / lambda`.
    pub fn utility(&self) -> &Array2<f64> {
        &self.utility
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn log_phi(&self) -> &[f64] {
        &self.log_phi
    }

    pub fn log_mu(&self) -> &[f64] {
        &self.log_mu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Same problem with a different characteristic prior.
    pub fn with_phi(&self, phi: &[f64]) -> Result<ProblemInstance> {
        if phi.len() != self.n() {
            return Err(Error::ShapeMismatch {
                what: "phi".into(),
                expected: self.n().to_string(),
                found: phi.len().to_string(),
            });
        }
        check_probability("phi", phi)?;
        if let Some((index, &value)) = phi.iter().enumerate().find(|(_, &v)| v == 0.0) {
            return Err(Error::NonPositiveMarginal { index, value });
        }
        let mut out = self.clone();
        out.phi = renormalized(phi);
        out.log_phi = out.phi.iter().map(|p| p.ln()).collect();
        Ok(out)
    }
}

fn check_probability(what: &str, p: &[f64]) -> Result<()> {
    for (index, &value) in p.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                what: what.into(),
                location: format!("index {index}"),
            });
        }
        if value < 0.0 {
            return Err(Error::NegativeProbability {
                what: what.into(),
                index,
                value,
            });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_INPUT_TOL {
        return Err(Error::NotOnSimplex {
            what: what.into(),
            sum,
            tolerance: SIMPLEX_INPUT_TOL,
        });
    }
    Ok(())
}

fn renormalized(p: &[f64]) -> Vec<f64> {
    let sum: f64 = p.iter().sum();
    p.iter().map(|v| v / sum).collect()
}

fn check_distinct(what: &str, labels: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(Error::DuplicateLabel {
                what: what.into(),
                label: label.clone(),
            });
        }
    }
    Ok(())
}

/// Checks raw data, drops null-mass characteristics and states, renormalizes
/// the priors and rescales utility by `1 / lambda`.
pub fn validate_instance(raw: &RawInstance) -> Result<ProblemInstance> {
    let n = raw.characteristics.len();
    let m = raw.states.len();
    let shape = |what: &str, expected: usize, found: usize| Error::ShapeMismatch {
        what: what.into(),
        expected: expected.to_string(),
        found: found.to_string(),
    };
    if raw.phi.len() != n {
        return Err(shape("phi", n, raw.phi.len()));
    }
    if raw.mu.len() != m {
        return Err(shape("mu", m, raw.mu.len()));
    }
    if raw.utility.len() != n {
        return Err(shape("utility rows", n, raw.utility.len()));
    }
    for (i, row) in raw.utility.iter().enumerate() {
        if row.len() != m {
            return Err(shape(&format!("utility row {i}"), m, row.len()));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "utility".into(),
                location: format!("row {i}, column {j}"),
            });
        }
    }
    check_distinct("characteristic", &raw.characteristics)?;
    check_distinct("state", &raw.states)?;
    check_probability("phi", &raw.phi)?;
    check_probability("mu", &raw.mu)?;
    if !(raw.alpha > 0.0 && raw.alpha <= 1.0) {
        return Err(Error::AlphaOutOfRange(raw.alpha));
    }
    if !(raw.lambda > 0.0 && raw.lambda.is_finite()) {
        return Err(Error::LambdaNotPositive(raw.lambda));
    }

    let rows: Vec<usize> = (0..n).filter(|&i| raw.phi[i] > 0.0).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| raw.mu[j] > 0.0).collect();
    if rows.is_empty() {
        return Err(Error::EmptyAfterPruning("characteristic set".into()));
    }
    if cols.is_empty() {
        return Err(Error::EmptyAfterPruning("state set".into()));
    }

    let phi = renormalized(&rows.iter().map(|&i| raw.phi[i]).collect::<Vec<_>>());
    let mu = renormalized(&cols.iter().map(|&j| raw.mu[j]).collect::<Vec<_>>());
    let utility = Array2::from_shape_fn((rows.len(), cols.len()), |(a, b)| {
        raw.utility[rows[a]][cols[b]] / raw.lambda
    });

    Ok(ProblemInstance {
        characteristic_labels: rows.iter().map(|&i| raw.characteristics[i].clone()).collect(),
        state_labels: cols.iter().map(|&j| raw.states[j].clone()).collect(),
        utility,
        log_phi: phi.iter().map(|p| p.ln()).collect(),
        log_mu: mu.iter().map(|p| p.ln()).collect(),
        phi,
        mu,
        alpha: raw.alpha,
        lambda: raw.lambda,
    })
}
