//! Zero-effect diagnostic, parametric bootstrap, likelihood-ratio test, fit
//! metrics and the simulation-study driver.

pub mod bootstrap;
pub mod diagnostic;
pub mod generate;
pub mod lrt;
pub mod metrics;
pub mod simulation;

pub use bootstrap::{
    bootstrap, bootstrap_bias, bootstrap_pvalue, pvalue_from_replicates, BootstrapConfig, BootstrapResult,
    MIN_REPLICATES,
};
pub use diagnostic::{diagnostic_t, quadratic_form, DiagnosticDocument, DiagnosticResult};
pub use lrt::{lrt, lrt_from_logliks, LrtResult};
pub use metrics::{fit_metrics, fit_metrics_matrix, FitMetrics};
pub use simulation::{format_real, run_simulation_study, SimulationCell, SimulationConfig, SimulationReport};
