use super::pipeline::Discretization;
use crate::cochain::{commuting_check, verify_complex, CommutingSquare, ComplexReport};
use crate::error::Result;
use crate::geometry::{Point, Vec3};
use crate::hodge::{build_hodge, check_p0_consistency, check_spd, Coefficient, HodgeDesign, Pairing};
use crate::mesh::{DualReport, MeshReport};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CommutingResult {
    pub square: &'static str,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HodgeCheck {
    pub pairing: Pairing,
    pub design: HodgeDesign,
    pub symmetry_defect: f64,
    pub lambda_min: f64,
    /// Relative residual on piecewise-constant fields.
    pub p0_residual: f64,
}

/// Structural diagnostics of one mesh: topology, dual geometry, exactness of
/// the incidence complex, commuting squares on affine fields and Hodge
/// operator checks.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StructuralReport {
    pub mesh: MeshReport,
    pub dual: DualReport,
    pub complex: ComplexReport,
    pub commuting: Vec<CommutingResult>,
    pub hodge: Vec<HodgeCheck>,
}

impl StructuralReport {
    pub fn max_commuting(&self) -> f64 {
        self.commuting.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

fn affine_potential(x: &Point) -> f64 {
    1.0 + 2.0 * x.x - 3.0 * x.y + 0.5 * x.z
}

fn affine_gradient(_: &Point) -> Vec3 {
    Vec3::new(2.0, -3.0, 0.5)
}

fn linear_field(x: &Point) -> Vec3 {
    Vec3::new(x.z - 2.0 * x.y, 3.0 * x.x + x.z, x.x - x.y)
}

fn linear_field_curl(_: &Point) -> Vec3 {
    Vec3::new(-2.0, 0.0, 5.0)
}

fn expanding_field(x: &Point) -> Vec3 {
    Vec3::new(2.0 * x.x + x.y, x.z - 3.0 * x.y, x.x + 4.0 * x.z)
}

fn expanding_field_divergence(_: &Point) -> f64 {
    3.0
}

/// Commuting-square residuals of the gradient, curl and divergence squares.
pub fn affine_commuting_residuals(disc: &Discretization) -> Result<Vec<CommutingResult>> {
    let squares = [
        CommutingSquare::Gradient { potential: &affine_potential, gradient: Some(&affine_gradient) },
        CommutingSquare::Curl { field: &linear_field, curl: Some(&linear_field_curl) },
        CommutingSquare::Divergence { field: &expanding_field, divergence: Some(&expanding_field_divergence) },
    ];
    squares
        .into_iter()
        .map(|sq| {
            Ok(CommutingResult {
                square: sq.name(),
                residual: commuting_check(&disc.mesh, &disc.dual, &disc.inc, sq)?,
            })
        })
        .collect()
}

/// Symmetry, smallest eigenvalue and P0 residual of the edge and face
/// pairings in both designs.
pub fn hodge_checks(disc: &Discretization, beta: f64) -> Result<Vec<HodgeCheck>> {
    let mut out = Vec::new();
    for design in [HodgeDesign::Diagonal, HodgeDesign::ConsistentStabilized] {
        for (pairing, coeff) in [
            (Pairing::EdgeToDualFace, Coefficient::Density),
            (Pairing::FaceToDualEdge, Coefficient::Viscosity),
        ] {
            let h = build_hodge(&disc.mesh, &disc.dual, pairing, &disc.material, coeff, design, beta)?;
            let spd = check_spd(&h)?;
            out.push(HodgeCheck {
                pairing,
                design,
                symmetry_defect: spd.symmetry_defect,
                lambda_min: spd.lambda_min,
                p0_residual: check_p0_consistency(&h, &disc.mesh, &disc.dual, &disc.material)?,
            });
        }
    }
    Ok(out)
}

pub fn structural_report(disc: &Discretization, beta: f64) -> Result<StructuralReport> {
    Ok(StructuralReport {
        mesh: disc.mesh.report(),
        dual: disc.dual.report(&disc.mesh),
        complex: verify_complex(&disc.inc),
        commuting: affine_commuting_residuals(disc)?,
        hodge: hodge_checks(disc, beta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{level_mesh, MeshFamily};

    #[test]
    fn perturbed_tet_mesh_is_structurally_sound() {
        let disc = Discretization::new(level_mesh(MeshFamily::Tet, 2, 0.2, 3).unwrap()).unwrap();
        let r = structural_report(&disc, 1.0).unwrap();
        assert!(r.complex.is_complex());
        assert!(r.max_commuting() <= 1e-12, "{:?}", r.commuting);
        for h in &r.hodge {
            assert!(h.symmetry_defect <= 1e-14 && h.lambda_min > 0.0, "{h:?}");
            if h.design == HodgeDesign::ConsistentStabilized {
                assert!(h.p0_residual <= 1e-12, "{h:?}");
            }
        }
    }
}
