//! Manufactured solutions, discrete error norms, convergence studies and
//! run configuration files.

mod cases;
mod config;
mod convergence;
mod errors;
mod pipeline;
mod structure;

pub use cases::{manufactured_case, CaseDefects, ManufacturedCase, CASE_NAMES};
pub use config::{RunConfig, CONFIG_KEYS};
pub use convergence::{
    level_mesh, observed_order, run_convergence, ConvergenceConfig, ConvergenceReport, LevelResult, MeshFamily,
    CSV_HEADER, DEFAULT_PERTURBATION,
};
pub use errors::{energy_norm, error_norms, pressure_error, ErrorRecord, ZERO_REFERENCE};
pub use pipeline::{assemble_case, solve_case, solve_system, CaseSolution, Discretization, SolveSettings};
pub use structure::{
    affine_commuting_residuals, hodge_checks, structural_report, CommutingResult, HodgeCheck, StructuralReport,
};
