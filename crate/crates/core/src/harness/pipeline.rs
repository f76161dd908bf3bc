use super::cases::ManufacturedCase;
use super::errors::{error_norms, ErrorRecord};
use crate::cochain::{build_incidence, Incidence};
use crate::error::{Error, Result};
use crate::hodge::{HodgeDesign, MaterialField};
use crate::mesh::{build_dual, DualMesh, PrimalMesh};
use crate::solver::{solve_direct, solve_minres, DirectOptions, MinresOptions, SolveResult, SolverKind};
use crate::stokes::{
    assemble, conservation_residuals, discretize_load, AssemblyOptions, ConservationReport, LoadStrategy,
    SaddleSystem, Scheme, SchemeContext, SchemeOperators,
};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveSettings {
    pub design: HodgeDesign,
    pub beta: f64,
    pub load: LoadStrategy,
    pub solver: SolverKind,
    pub tol: f64,
    pub maxit: usize,
    pub constraint: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            design: HodgeDesign::ConsistentStabilized,
            beta: 1.0,
            load: LoadStrategy::Raw,
            solver: SolverKind::Direct,
            tol: 1e-10,
            maxit: 20_000,
            constraint: true,
        }
    }
}

/// A mesh with everything derived from it that does not depend on the scheme.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: PrimalMesh,
    pub dual: DualMesh,
    pub inc: Incidence,
    pub material: MaterialField,
}

impl Discretization {
    /// Unit density and viscosity.
    pub fn new(mesh: PrimalMesh) -> Result<Self> {
        let material = MaterialField::unit(&mesh);
        Self::with_material(mesh, material)
    }

    pub fn with_material(mesh: PrimalMesh, material: MaterialField) -> Result<Self> {
        if material.len() != mesh.num_cells() {
            return Err(Error::invalid(format!(
                "material has {} cells, mesh has {}",
                material.len(),
                mesh.num_cells()
            )));
        }
        let dual = build_dual(&mesh)?;
        let inc = build_incidence(&mesh);
        Ok(Discretization { mesh, dual, inc, material })
    }

    pub fn context(&self) -> SchemeContext<'_> {
        SchemeContext {
            mesh: &self.mesh,
            dual: &self.dual,
            inc: &self.inc,
            material: &self.material,
        }
    }

    pub fn operators(&self, scheme: Scheme, settings: &SolveSettings) -> Result<SchemeOperators> {
        SchemeOperators::build(&self.context(), scheme, settings.design, settings.beta)
    }
}

/// Solves with the configured solver. A MINRES run that stops before
/// reaching the tolerance is a numerical failure.
pub fn solve_system(sys: &SaddleSystem, settings: &SolveSettings) -> Result<SolveResult> {
    match settings.solver {
        SolverKind::Direct => solve_direct(
            sys,
            &DirectOptions {
                tol: settings.tol,
                ..DirectOptions::default()
            },
        ),
        SolverKind::Minres => {
            let res = solve_minres(
                sys,
                &MinresOptions {
                    tol: settings.tol,
                    maxit: settings.maxit,
                    ..MinresOptions::default()
                },
            )?;
            if !res.converged {
                return Err(Error::NumericalFailure(format!(
                    "MINRES stopped after {} iterations at relative residual {:.3e}",
                    settings.maxit, res.relative_residual
                )));
            }
            Ok(res)
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaseSolution {
    pub ops: SchemeOperators,
    pub system: SaddleSystem,
    pub solve: SolveResult,
    pub errors: ErrorRecord,
    pub conservation: ConservationReport,
}

/// Assembles the system of `case` with its own boundary traces.
pub fn assemble_case(
    disc: &Discretization,
    ops: &SchemeOperators,
    case: &ManufacturedCase,
    settings: &SolveSettings,
) -> Result<SaddleSystem> {
    let ctx = disc.context();
    let load = discretize_load(&ctx, ops, &case.load(), settings.load)?;
    assemble(
        &ctx,
        ops,
        &load,
        &case.boundary(),
        AssemblyOptions {
            constraint: settings.constraint,
        },
    )
}

/// Full pipeline for one mesh: operators, load, assembly, solve, errors and
/// conservation audit.
pub fn solve_case(
    disc: &Discretization,
    scheme: Scheme,
    case: &ManufacturedCase,
    settings: &SolveSettings,
) -> Result<CaseSolution> {
    let ops = disc.operators(scheme, settings)?;
    let system = assemble_case(disc, &ops, case, settings)?;
    let solve = solve_system(&system, settings)?;
    let errors = error_norms(&disc.context(), &ops, &system, &solve.solution, case)?;
    let conservation = conservation_residuals(&system, &solve.solution)?;
    Ok(CaseSolution {
        ops,
        system,
        solve,
        errors,
        conservation,
    })
}
