//! Zero-adjusted Dirichlet regression for compositional data.
//!
//! Rows with structural zeros contribute the density of their positive
//! sub-composition plus a Bernoulli term for the zero pattern, so no value is
//! ever imputed. The crate covers data handling and log-ratio transforms
//! ([`compositions`]), special functions and optimization ([`numerics`]),
//! the Dirichlet distribution ([`dirichlet`]), model fitting ([`zadr`]) and
//! diagnostics ([`inference`]).

pub mod compositions;
pub mod dirichlet;
pub mod error;
pub mod inference;
pub mod io;
pub mod numerics;
pub mod random;
pub mod zadr;

pub use compositions::{
    alr, alr_inv, estimate_p, load_dataset, zero_pattern, CompositionDataset, CovariateMatrix, ZeroPattern,
};
pub use dirichlet::{DirichletParams, SubcompositionMode};
pub use error::{Result, ZadrError};
pub use inference::{
    bootstrap_bias, bootstrap_pvalue, diagnostic_t, fit_metrics, lrt, run_simulation_study, BootstrapConfig,
    BootstrapResult, DiagnosticResult, FitMetrics, LrtResult, SimulationConfig, SimulationReport,
};
pub use numerics::{OptimizerOptions, TerminationReason};
pub use zadr::{fit, fitted_values, FitOptions, FitOutcome, LinkSpec, ModelKind, Precision, ZadrModel};
