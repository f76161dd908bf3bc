use std::sync::Arc;

use crate::cochain::{face_flux, VectorFn};
use crate::error::{Error, Result};
use crate::geometry::{Point, Vec3};
use crate::mesh::PrimalMesh;

/// Tolerance on `|∮ u·n| / max(1, ∮ |u·n|)`.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BcSet {
    /// Normal velocity and tangential vorticity.
    NormalVelocityTangentialVorticity,
    /// Tangential velocity and pressure (not supported).
    TangentialVelocityPressure,
}

/// Boundary traces given through closed-form fields; only the normal part of
/// `velocity` and the tangential part of `vorticity` are used.
#[derive(Clone)]
pub struct BoundaryData {
    set: BcSet,
    velocity: Option<VectorFn>,
    vorticity: Option<VectorFn>,
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryData")
            .field("set", &self.set)
            .field("homogeneous", &self.is_homogeneous())
            .finish()
    }
}

fn zero(_: &Point) -> Vec3 {
    Vec3::zeros()
}

impl BoundaryData {
    pub fn homogeneous() -> Self {
        BoundaryData {
            set: BcSet::NormalVelocityTangentialVorticity,
            velocity: None,
            vorticity: None,
        }
    }

    pub fn from_fields(velocity: VectorFn, vorticity: VectorFn) -> Self {
        BoundaryData {
            set: BcSet::NormalVelocityTangentialVorticity,
            velocity: Some(velocity),
            vorticity: Some(vorticity),
        }
    }

    /// Tangential velocity and boundary pressure; kept only so that callers
    /// get a clear rejection.
    pub fn tangential_velocity_pressure() -> Self {
        BoundaryData {
            set: BcSet::TangentialVelocityPressure,
            velocity: None,
            vorticity: None,
        }
    }

    pub fn set(&self) -> BcSet {
        self.set
    }

    pub fn is_homogeneous(&self) -> bool {
        self.velocity.is_none() && self.vorticity.is_none()
    }

    pub fn velocity(&self) -> VectorFn {
        self.velocity.clone().unwrap_or_else(|| Arc::new(zero))
    }

    pub fn vorticity(&self) -> VectorFn {
        self.vorticity.clone().unwrap_or_else(|| Arc::new(zero))
    }

    pub(crate) fn require_supported(&self) -> Result<()> {
        match self.set {
            BcSet::NormalVelocityTangentialVorticity => Ok(()),
            BcSet::TangentialVelocityPressure => Err(Error::Unsupported(
                "boundary conditions on tangential velocity and pressure are not implemented; \
                 use normal velocity with tangential vorticity"
                    .into(),
            )),
        }
    }

    /// Checks `∮ u·n = 0`, returning the relative imbalance.
    pub fn check_compatibility(&self, mesh: &PrimalMesh) -> Result<f64> {
        if self.velocity.is_none() {
            return Ok(0.0);
        }
        let (net, total) = boundary_flux_imbalance(mesh, &self.velocity());
        let rel = net.abs() / total.max(1.0);
        if rel > COMPATIBILITY_TOL {
            return Err(Error::IncompatibleBc(format!(
                "net boundary flux {net:.3e} (relative {rel:.3e}) exceeds {COMPATIBILITY_TOL:e}"
            )));
        }
        Ok(rel)
    }
}

/// `(Σ outward flux, Σ |flux|)` of `u` over the boundary faces.
pub fn boundary_flux_imbalance(mesh: &PrimalMesh, u: &VectorFn) -> (f64, f64) {
    let mut net = 0.0;
    let mut total = 0.0;
    for f in (0..mesh.num_faces()).filter(|&f| mesh.is_boundary_face(f)) {
        let (_, s) = mesh.face_cells(f)[0];
        let q = s as f64 * face_flux(mesh, f, &**u);
        net += q;
        total += q.abs();
    }
    (net, total)
}
