//! Zero-adjusted Dirichlet regression: links, likelihoods, fitting.

pub mod aitchison;
pub mod fit;
pub mod likelihood;
pub mod link;
pub mod persist;

pub use aitchison::{fit_aitchison, AitchisonModel};
pub use fit::{fit, fitted_values, ols_init, FitOptions, FitOutcome, PrecisionInit, Stage, ZadrModel};
pub use likelihood::{
    analytic_gradient, binary_loglik, loglik_mixed, loglik_simple, loglik_zadr_mixed, loglik_zadr_simple,
    num_params, pack_params, unpack_params, Precision,
};
pub use link::{binary_log_prob, link_alpha, link_phi, LinkSpec, ModelKind};
pub use persist::{ModelDocument, LIBRARY_VERSION};
