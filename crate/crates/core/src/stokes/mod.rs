//! Vertex-based and cell-based Stokes saddle-point systems.
//!
//! Vertex-based unknowns are velocity circulations on primal edges and
//! pressures on primal vertices; momentum balances live on dual faces and
//! mass balances on dual cells. Cell-based unknowns are vorticity
//! circulations on edges, mass fluxes on faces and pressures at cell
//! centers; momentum balances live on dual edges and mass balances on primal
//! cells. Both add one Lagrange multiplier for the zero-mean pressure.

mod assemble;
mod boundary;
mod conservation;
mod load;
mod system;

pub use assemble::{
    assemble, assemble_cell_based, assemble_vertex_based, AssemblyOptions, SchemeContext,
    SchemeOperators,
};
pub use boundary::{boundary_flux_imbalance, BcSet, BoundaryData, COMPATIBILITY_TOL};
pub use conservation::{conservation_residuals, divergence_theorem_defect, ConservationReport};
pub use load::{discretize_load, LoadSpec, LoadStrategy};
pub use system::{BlockInfo, SaddleSystem};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    VertexBased,
    CellBased,
}

impl Scheme {
    pub fn short_name(self) -> &'static str {
        match self {
            Scheme::VertexBased => "vb",
            Scheme::CellBased => "cb",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::VertexBased => "vertex-based",
            Scheme::CellBased => "cell-based",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vb" | "vertex-based" => Ok(Scheme::VertexBased),
            "cb" | "cell-based" => Ok(Scheme::CellBased),
            other => Err(Error::invalid(format!("unknown scheme '{other}' (expected vb or cb)"))),
        }
    }
}
