//! Direct and iterative solvers for the saddle-point systems, and discrete
//! stability probes.

mod direct;
mod minres;
mod probe;

pub use direct::{solve_direct, DirectOptions, FactorStats, DEFAULT_DIRECT_CAP};
pub use minres::{solve_minres, MinresOptions, Preconditioner};
pub use probe::{dense_probe, stability_probe, ProbeKind, ProbeResult};

use crate::stokes::SaddleSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Direct,
    Minres,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SolveResult {
    pub method: SolverKind,
    /// Full solution vector, essential values included.
    pub solution: Vec<f64>,
    /// Relative residual recomputed from the unpreconditioned system.
    pub relative_residual: f64,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub factorization: Option<FactorStats>,
}

impl SolveResult {
    /// One named block of the solution.
    pub fn block<'a>(&'a self, sys: &SaddleSystem, name: &str) -> Option<&'a [f64]> {
        sys.slice(&self.solution, name)
    }
}

/// Largest relative block difference `‖a_B − b_B‖₂ / max(‖b_B‖₂, floor)` over the
/// field blocks of `sys`.
pub fn block_difference(sys: &SaddleSystem, a: &[f64], b: &[f64], floor: f64) -> Vec<(&'static str, f64)> {
    sys.blocks()
        .iter()
        .filter(|blk| blk.name != "lambda")
        .map(|blk| {
            let r = blk.range();
            let diff: f64 = a[r.clone()].iter().zip(&b[r.clone()]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = b[r].iter().map(|y| y * y).sum::<f64>().sqrt();
            (blk.name, diff / scale.max(floor))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::cochain::{build_incidence, Cochain, Side};
    use crate::error::Error;
    use crate::geometry::{Point, Vec3};
    use crate::hodge::{HodgeDesign, MaterialField};
    use crate::mesh::{build_cartesian_hex, build_dual, BoundingBox, EntityKind};
    use crate::stokes::{
        assemble, discretize_load, AssemblyOptions, BoundaryData, LoadSpec, LoadStrategy, Scheme, SchemeContext,
        SchemeOperators,
    };

    fn systems(constraint: bool, zero: bool) -> Vec<SaddleSystem> {
        let m = build_cartesian_hex(2, 2, 2, BoundingBox::unit()).unwrap();
        let d = build_dual(&m).unwrap();
        let inc = build_incidence(&m);
        let mat = MaterialField::unit(&m);
        let ctx = SchemeContext { mesh: &m, dual: &d, inc: &inc, material: &mat };
        let load = LoadSpec::raw(Arc::new(|x: &Point| Vec3::new((3.0 * x.y).sin(), x.z * x.x, 1.0)));
        [Scheme::VertexBased, Scheme::CellBased]
            .into_iter()
            .map(|scheme| {
                let ops = SchemeOperators::build(&ctx, scheme, HodgeDesign::ConsistentStabilized, 1.0).unwrap();
                let rhs = if zero {
                    let kind = if scheme == Scheme::VertexBased { EntityKind::Face } else { EntityKind::Edge };
                    Cochain::zeros(&m, Side::Dual, kind)
                } else {
                    discretize_load(&ctx, &ops, &load, LoadStrategy::Raw).unwrap()
                };
                assemble(&ctx, &ops, &rhs, &BoundaryData::homogeneous(), AssemblyOptions { constraint }).unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        for sys in systems(true, true) {
            let d = solve_direct(&sys, &DirectOptions::default()).unwrap();
            assert!(d.solution.iter().all(|&v| v == 0.0));
            assert_eq!(d.relative_residual, 0.0);
            let m = solve_minres(&sys, &MinresOptions::default()).unwrap();
            assert_eq!(m.iterations, Some(0));
        }
    }

    #[test]
    fn missing_constraint_is_singular() {
        for sys in systems(false, false) {
            match solve_direct(&sys, &DirectOptions::default()) {
                Err(Error::SingularSystem { hint, .. }) => assert!(hint.contains("constant pressure")),
                other => panic!("expected a singular system, got {other:?}"),
            }
        }
    }

    #[test]
    fn minres_agrees_with_direct() {
        for sys in systems(true, false) {
            let d = solve_direct(&sys, &DirectOptions::default()).unwrap();
            assert!(d.relative_residual <= 1e-10);
            let m = solve_minres(&sys, &MinresOptions { tol: 1e-12, ..MinresOptions::default() }).unwrap();
            assert!(m.converged, "{} after {:?}", m.relative_residual, m.iterations);
            for (name, diff) in block_difference(&sys, &m.solution, &d.solution, 1e-300) {
                assert!(diff <= 1e-6, "{name}: {diff}");
            }
            let loose = solve_minres(&sys, &MinresOptions { tol: 1e-1, ..MinresOptions::default() }).unwrap();
            let tight = solve_minres(&sys, &MinresOptions { tol: 1e-8, ..MinresOptions::default() }).unwrap();
            assert!(loose.iterations < tight.iterations);
        }
    }

    #[test]
    fn maxit_is_flagged() {
        let sys = &systems(true, false)[0];
        let r = solve_minres(sys, &MinresOptions { tol: 1e-14, maxit: 3, precond: Preconditioner::None }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, Some(3));
    }
}
