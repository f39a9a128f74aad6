//! Seeded generators for instances, marginals and couplings.
//!
//! Everything here is driven by `ChaCha8Rng`, so a seed gives the same
//! stream on every platform.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Coupling, MarginalX, ProblemInstance, RawInstance};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parameters for [`random_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub utility_min: f64,
    pub utility_max: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 3,
            m: 3,
            utility_min: 0.0,
            utility_max: 1.0,
            alpha: 0.5,
            lambda: 1.0,
        }
    }
}

/// Utilities uniform on `[utility_min, utility_max)`; priors are
/// `0.1 + U[0,1)` draws, normalized.
pub fn random_instance(spec: &InstanceSpec) -> RawInstance {
    let mut rng = seeded_rng(spec.seed);
    let width = spec.utility_max - spec.utility_min;
    let utility = (0..spec.n)
        .map(|_| {
            (0..spec.m)
                .map(|_| spec.utility_min + width * rng.random::<f64>())
                .collect()
        })
        .collect();
    let mut prior = |k: usize| {
        let mut v: Vec<f64> = (0..k).map(|_| 0.1 + rng.random::<f64>()).collect();
        crate::numerics::normalize_in_place(&mut v);
        v
    };
    let phi = prior(spec.n);
    let mu = prior(spec.m);
    RawInstance::unlabeled(utility, phi, mu, spec.alpha, spec.lambda)
}

/// A flat-Dirichlet draw on the simplex, bounded away from zero.
pub fn random_simplex_point<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-12)
        .collect();
    crate::numerics::normalize_in_place(&mut v);
    v
}

pub fn random_marginal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> MarginalX {
    MarginalX::from_normalized_unchecked(random_simplex_point(rng, n))
}

/// A full-support Bayes-plausible coupling for `inst`.
pub fn random_coupling<R: Rng + ?Sized>(rng: &mut R, inst: &ProblemInstance) -> Coupling {
    let mut joint = Array2::zeros((inst.n(), inst.m()));
    for (j, &m) in inst.mu().iter().enumerate() {
        let q = random_simplex_point(rng, inst.n());
        for i in 0..inst.n() {
            joint[[i, j]] = m * q[i];
        }
    }
    Coupling::new(joint).expect("columns are scaled simplex points")
}
