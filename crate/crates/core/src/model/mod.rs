//! Problem data, information costs and closed-form quantities.

pub mod coupling;
pub mod information;
pub mod instance;
pub mod logit;
pub mod surprisal;

pub use coupling::{Coupling, MarginalX, COUPLING_MASS_TOL};
pub use information::{
    expected_utility, kappa_cost, kappa_cost_form, kl_divergence, mutual_information, objective_u, CostForm,
};
pub use instance::{validate_instance, ProblemInstance, RawInstance, SIMPLEX_INPUT_TOL};
pub use logit::{coupling_from_marginal, log_partition, mnl_ccp, partition_z};
pub use surprisal::{surprisal_y, SurprisalMatrix};
