//! Compatible Discrete Operator (CDO) schemes for the stationary Stokes
//! equations in curl form on three-dimensional polyhedral meshes.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: primal polyhedral meshes, generators, I/O and the barycentric dual.
//! - [`cochain`]: signed incidence matrices, de Rham reductions and the
//!   exactness / commuting checks.
//! - [`hodge`]: discrete Hodge operators (diagonal and consistent + stabilized).
//! - [`stokes`]: vertex-based and cell-based saddle-point assembly, load
//!   discretizations and conservation audits.
//! - [`solver`]: direct and MINRES solvers plus discrete stability probes.
//! - [`harness`]: manufactured solutions, error norms and convergence studies.

pub mod cochain;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod hodge;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod stokes;

pub use error::{Error, Result};
pub use geometry::{Point, Vec3};
