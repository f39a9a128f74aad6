//! Brute-force reference maximizer of `U(P)` over Bayes-plausible couplings.
//!
//! The columns `q(·|θ)` of the choice probabilities are free on a simplex
//! truncated at `δ`; the objective is climbed by projected gradient ascent with
//! Armijo backtracking from several starts. Only meant for tiny instances.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{objective_u, Coupling, ProblemInstance};
use crate::random::{random_simplex_point, seeded_rng};

/// Largest `n·m` the oracle accepts.
pub const ORACLE_MAX_CELLS: usize = 12;

const FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Ascent steps per start.
    pub iterations: usize,
    /// Number of starts: product `φ⊗μ`, uniform, then seeded random ones.
    pub starts: usize,
    pub seed: u64,
    /// Stop a start once an accepted step improves by less than this.
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            starts: 6,
            seed: 0,
            tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub u_best: f64,
    pub coupling: Coupling,
    /// Final value reached from each start, in order.
    pub start_values: Vec<f64>,
    /// Largest relative mismatch between the analytic directional derivative
    /// and a central difference, over all starts.
    pub gradient_check_error: f64,
}

/// `U/λ` as a function of the choice probabilities.
fn value(q: &Array2<f64>, inst: &ProblemInstance) -> f64 {
    let (n, m) = q.dim();
    let mu = inst.mu();
    let w = inst.utility();
    let alpha = inst.alpha();
    let r: Vec<f64> = (0..n).map(|i| (0..m).map(|j| mu[j] * q[[i, j]]).sum()).collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let p = mu[j] * q[[i, j]];
            if p > 0.0 {
                total += p * (w[[i, j]] - q[[i, j]].ln());
            }
        }
        if r[i] > 0.0 {
            total += r[i] * r[i].ln() - alpha * r[i] * (r[i].ln() - inst.log_phi()[i]);
        }
    }
    total
}

/// `∂(U/λ)/∂q(ξ|θ) = μ(θ) (Y(ξ,θ) - α)`.
fn gradient(q: &Array2<f64>, inst: &ProblemInstance) -> Array2<f64> {
    let (n, m) = q.dim();
    let mu = inst.mu();
    let w = inst.utility();
    let alpha = inst.alpha();
    let r: Vec<f64> = (0..n).map(|i| (0..m).map(|j| mu[j] * q[[i, j]]).sum()).collect();
    Array2::from_shape_fn((n, m), |(i, j)| {
        let y = w[[i, j]] - alpha * (r[i].ln() - inst.log_phi()[i]) - (q[[i, j]].ln() - r[i].ln());
        mu[j] * (y - alpha)
    })
}

/// Euclidean projection of `v` onto `{x ≥ floor, Σx = 1}`.
fn project_column(v: &mut [f64], floor: f64) {
    let budget = 1.0 - floor * v.len() as f64;
    let mut sorted: Vec<f64> = v.iter().map(|x| x - floor).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (k, s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - budget) / (k + 1) as f64;
        if s - t > 0.0 {
            shift = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - floor - shift).max(0.0) + floor;
    }
}

fn project(q: &mut Array2<f64>) {
    for mut col in q.columns_mut() {
        let mut v = col.to_vec();
        project_column(&mut v, FLOOR);
        col.assign(&ndarray::ArrayView1::from(&v));
    }
}

/// Relative error of the analytic derivative along a random within-column
/// direction.
fn check_gradient(q: &Array2<f64>, inst: &ProblemInstance, rng: &mut impl Rng) -> f64 {
    let (n, m) = q.dim();
    if n < 2 {
        return 0.0;
    }
    let mut d = Array2::from_shape_fn((n, m), |_| rng.random::<f64>() - 0.5);
    for mut col in d.columns_mut() {
        let mean = col.sum() / n as f64;
        col -= mean;
    }
    let qmin = q.iter().copied().fold(f64::INFINITY, f64::min);
    let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let h = 1e-5 * qmin / dmax.max(1e-300);
    let plus = q + &(&d * h);
    let minus = q - &(&d * h);
    let fd = (value(&plus, inst) - value(&minus, inst)) / (2.0 * h);
    let analytic: f64 = (gradient(q, inst) * &d).sum();
    (fd - analytic).abs() / analytic.abs().max(1e-8)
}

fn to_coupling(q: &Array2<f64>, inst: &ProblemInstance) -> Result<Coupling> {
    let mut joint = q.clone();
    for (mut col, &m) in joint.columns_mut().into_iter().zip(inst.mu()) {
        col *= m;
    }
    Coupling::new(joint)
}

fn ccp_of(start: &Coupling) -> Array2<f64> {
    let cols = start.column_marginal();
    let (n, m) = start.shape();
    Array2::from_shape_fn((n, m), |(i, j)| {
        if cols[j] > 0.0 {
            start.joint()[[i, j]] / cols[j]
        } else {
            1.0 / n as f64
        }
    })
}

fn ascend(mut q: Array2<f64>, inst: &ProblemInstance, options: &OracleOptions) -> (f64, Array2<f64>) {
    project(&mut q);
    let mut f = value(&q, inst);
    let mut step = 1.0;
    for _ in 0..options.iterations {
        let g = gradient(&q, inst);
        let mut accepted = false;
        let mut gain = 0.0;
        for _ in 0..60 {
            let mut cand = &q + &(&g * step);
            project(&mut cand);
            let predicted: f64 = (&g * &(&cand - &q)).sum();
            let fc = value(&cand, inst);
            if predicted <= 0.0 {
                break;
            }
            if fc >= f + 1e-4 * predicted {
                gain = fc - f;
                q = cand;
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || gain <= options.tol {
            break;
        }
        step *= 2.0;
    }
    (f, q)
}

/// Local ascent from a single starting coupling; returns `U` in utility units.
pub fn oracle_ascent(inst: &ProblemInstance, start: &Coupling, options: &OracleOptions) -> Result<(f64, Coupling)> {
    guard(inst)?;
    crate::model::information::ensure_shape(start, inst)?;
    let (_, q) = ascend(ccp_of(start), inst, options);
    let p = to_coupling(&q, inst)?;
    Ok((objective_u(&p, inst)?, p))
}

fn guard(inst: &ProblemInstance) -> Result<()> {
    let size = inst.n() * inst.m();
    if size > ORACLE_MAX_CELLS {
        return Err(Error::TooLarge {
            size,
            limit: ORACLE_MAX_CELLS,
        });
    }
    Ok(())
}

/// Multi-start maximizer of `U(P)`, independent of the envelope machinery.
pub fn brute_force_oracle(inst: &ProblemInstance, options: &OracleOptions) -> Result<OracleResult> {
    guard(inst)?;
    if options.starts == 0 {
        return Err(Error::InvalidParameter("oracle needs at least one start".into()));
    }
    let (n, m) = (inst.n(), inst.m());
    let mut rng = seeded_rng(options.seed);
    let mut best: Option<(f64, Array2<f64>)> = None;
    let mut start_values = Vec::with_capacity(options.starts);
    let mut gradient_check_error = 0.0f64;
    for s in 0..options.starts {
        let mut q = match s {
            0 => Array2::from_shape_fn((n, m), |(i, _)| inst.phi()[i]),
            1 => Array2::from_elem((n, m), 1.0 / n as f64),
            _ => {
                let mut q = Array2::zeros((n, m));
                for mut col in q.columns_mut() {
                    col.assign(&ndarray::Array1::from(random_simplex_point(&mut rng, n)));
                }
                q
            }
        };
        project(&mut q);
        gradient_check_error = gradient_check_error.max(check_gradient(&q, inst, &mut rng));
        let (f, q) = ascend(q, inst, options);
        start_values.push(f * inst.lambda());
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, q));
        }
    }
    let (_, q) = best.expect("at least one start");
    let coupling = to_coupling(&q, inst)?;
    Ok(OracleResult {
        u_best: objective_u(&coupling, inst)?,
        coupling,
        start_values,
        gradient_check_error,
    })
}
