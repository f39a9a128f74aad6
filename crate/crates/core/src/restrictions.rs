//! Testable implications of product entry. When a new product changes the
//! prior from `φ` to `φ′` and nothing else moves, the double ratio
//! `[P(ξ₁|θ)/P′(ξ₁|θ)]·[P′(ξ₂|θ)/P(ξ₂|θ)]` cannot depend on `θ`; its level
//! then identifies `α` once both priors are known.

use crate::error::{Error, Result};
use crate::model::{ProblemInstance, RawInstance};
use crate::optimizer::{full_solve, Solution, SolveOptions};

/// `|A - B|` below this makes a pair uninformative about `α`.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Base market and the same market after entry. Fields are public so callers
/// can build falsification probes by editing a solution.
#[derive(Debug, Clone)]
pub struct EntryPair {
    pub base: ProblemInstance,
    pub entrant: ProblemInstance,
    pub base_solution: Solution,
    pub entrant_solution: Solution,
}

fn shared_fields_match(a: &ProblemInstance, b: &ProblemInstance) -> Result<()> {
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let mismatch = |what: &str| Err(Error::SharedFieldMismatch(what.into()));
    if a.characteristic_labels() != b.characteristic_labels() {
        return mismatch("characteristic labels");
    }
    if a.state_labels() != b.state_labels() {
        return mismatch("state labels");
    }
    if a.alpha().to_bits() != b.alpha().to_bits() {
        return mismatch("alpha");
    }
    if a.lambda().to_bits() != b.lambda().to_bits() {
        return mismatch("lambda");
    }
    if bits(a.mu()) != bits(b.mu()) {
        return mismatch("state prior");
    }
    let ua = a.utility().as_standard_layout();
    let ub = b.utility().as_standard_layout();
    if bits(ua.as_slice().expect("standard layout")) != bits(ub.as_slice().expect("standard layout")) {
        return mismatch("utility");
    }
    Ok(())
}

impl EntryPair {
    /// Pairs two already-solved instances after checking that only the prior
    /// over characteristics differs.
    pub fn from_solutions(
        base: ProblemInstance,
        entrant: ProblemInstance,
        base_solution: Solution,
        entrant_solution: Solution,
    ) -> Result<Self> {
        shared_fields_match(&base, &entrant)?;
        for (what, s) in [("base", &base_solution), ("entrant", &entrant_solution)] {
            if !s.converged {
                return Err(Error::NotConverged {
                    what: format!("{what} solve"),
                    iterations: s.outer_iterations,
                    residual: s.foc_residual,
                });
            }
        }
        Ok(Self {
            base,
            entrant,
            base_solution,
            entrant_solution,
        })
    }

    /// Validates and solves both markets, concurrently.
    pub fn solve(base: ProblemInstance, entrant: ProblemInstance, options: &SolveOptions) -> Result<Self> {
        shared_fields_match(&base, &entrant)?;
        let (b, e) = std::thread::scope(|s| {
            let h = s.spawn(|| full_solve(&entrant, options));
            let b = full_solve(&base, options);
            (b, h.join().expect("entrant solve panicked"))
        });
        Self::from_solutions(base, entrant, b?, e?)
    }

    /// Convenience: the entrant is `base` with prior `phi_entrant`.
    pub fn with_entrant_prior(base: ProblemInstance, phi_entrant: &[f64], options: &SolveOptions) -> Result<Self> {
        let entrant = base.with_phi(phi_entrant)?;
        Self::solve(base, entrant, options)
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    fn check_index(&self, x: usize) -> Result<()> {
        if x >= self.n() {
            return Err(Error::InvalidParameter(format!(
                "characteristic index {x} out of range for {} characteristics",
                self.n()
            )));
        }
        Ok(())
    }
}

/// `log` of the double ratio for each state.
fn log_double_ratio(pair: &EntryPair, x1: usize, x2: usize) -> Result<Vec<f64>> {
    pair.check_index(x1)?;
    pair.check_index(x2)?;
    let p = &pair.base_solution.ccp;
    let q = &pair.entrant_solution.ccp;
    (0..pair.base.m())
        .map(|j| {
            let entries = [p[[x1, j]], q[[x1, j]], q[[x2, j]], p[[x2, j]]];
            if entries.iter().any(|v| v.is_nan() || *v <= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "zero choice probability for characteristics ({x1}, {x2}) in state {j}"
                )));
            }
            Ok(entries[0].ln() - entries[1].ln() + entries[2].ln() - entries[3].ln())
        })
        .collect()
}

/// `θ ↦ [P(ξ₁|θ)/P′(ξ₁|θ)]·[P′(ξ₂|θ)/P(ξ₂|θ)]`.
pub fn double_ratio(pair: &EntryPair, x1: usize, x2: usize) -> Result<Vec<f64>> {
    Ok(log_double_ratio(pair, x1, x2)?.into_iter().map(f64::exp).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constancy {
    pub passed: bool,
    /// `max/min - 1`.
    pub deviation: f64,
}

pub fn constancy_test(ratios: &[f64], tol: f64) -> Constancy {
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let deviation = if ratios.is_empty() { 0.0 } else { max / min - 1.0 };
    Constancy {
        passed: deviation <= tol,
        deviation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaEstimate {
    Identified(f64),
    /// The priors and marginals move the same way; the pair says nothing.
    Degenerate,
}

impl AlphaEstimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            AlphaEstimate::Identified(a) => Some(*a),
            AlphaEstimate::Degenerate => None,
        }
    }
}

/// Solves `L = αA + (1-α)B` for `α`.
pub fn alpha_from_logs(l: f64, a: f64, b: f64) -> AlphaEstimate {
    if (a - b).abs() < DEGENERACY_TOL {
        AlphaEstimate::Degenerate
    } else {
        AlphaEstimate::Identified((l - b) / (a - b))
    }
}

fn log_cross(base: &[f64], entrant: &[f64], x1: usize, x2: usize) -> f64 {
    base[x1].ln() + entrant[x2].ln() - entrant[x1].ln() - base[x2].ln()
}

/// Recovers `α` from the level of the double ratio, using both priors and
/// both optimal marginals. Rejects the model first if the ratio moves with `θ`.
pub fn alpha_identify(pair: &EntryPair, x1: usize, x2: usize, tol: f64) -> Result<AlphaEstimate> {
    let logs = log_double_ratio(pair, x1, x2)?;
    let ratios: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
    let c = constancy_test(&ratios, tol);
    if !c.passed {
        return Err(Error::NonConstantRatio {
            first: x1,
            second: x2,
            deviation: c.deviation,
        });
    }
    let l = logs.iter().sum::<f64>() / logs.len() as f64;
    let a = log_cross(pair.base.phi(), pair.entrant.phi(), x1, x2);
    let b = log_cross(
        pair.base_solution.nu_star.weights(),
        pair.entrant_solution.nu_star.weights(),
        x1,
        x2,
    );
    Ok(alpha_from_logs(l, a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub first: usize,
    pub second: usize,
    pub ratios: Vec<f64>,
    pub constancy: Constancy,
    /// `None` when constancy failed and `α` was not attempted.
    pub alpha: Option<AlphaEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryReport {
    pub pairs: Vec<PairResult>,
    /// Median over informative pairs.
    pub alpha_hat: Option<f64>,
    /// `max - min` of the informative estimates.
    pub alpha_spread: f64,
    pub tol: f64,
    pub passed: bool,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    })
}

/// Runs the constancy test and `α` recovery over all ordered pairs of
/// distinct characteristics.
pub fn entry_report(pair: &EntryPair, tol: f64) -> Result<EntryReport> {
    let n = pair.n();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1));
    for x1 in 0..n {
        for x2 in 0..n {
            if x1 == x2 {
                continue;
            }
            let ratios = double_ratio(pair, x1, x2)?;
            let constancy = constancy_test(&ratios, tol);
            let alpha = if constancy.passed {
                Some(alpha_identify(pair, x1, x2, tol)?)
            } else {
                None
            };
            pairs.push(PairResult {
                first: x1,
                second: x2,
                ratios,
                constancy,
                alpha,
            });
        }
    }
    let estimates: Vec<f64> = pairs.iter().filter_map(|p| p.alpha.and_then(|a| a.value())).collect();
    let spread = if estimates.is_empty() {
        0.0
    } else {
        let max = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = estimates.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    };
    let passed = pairs.iter().all(|p| p.constancy.passed) && spread <= tol;
    Ok(EntryReport {
        alpha_hat: median(estimates),
        alpha_spread: spread,
        tol,
        passed,
        pairs,
    })
}

/// Prior proportional to product counts, `φ(x) = k_x / J`.
pub fn counts_prior(counts: &[u64]) -> Result<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("product counts sum to zero".into()));
    }
    Ok(counts.iter().map(|&k| k as f64 / total as f64).collect())
}

/// Copy of `raw` with a different prior over characteristics.
pub fn entrant_raw(raw: &RawInstance, phi_entrant: Vec<f64>) -> RawInstance {
    RawInstance {
        phi: phi_entrant,
        ..raw.clone()
    }
}
