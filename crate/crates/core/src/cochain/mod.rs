//! Cochains, signed incidence matrices and de Rham reductions.

mod checks;
mod incidence;

use crate::error::{Error, Result};
use crate::geometry::{Point, Vec3};
use crate::mesh::{DualMesh, EntityKind, PrimalMesh};
use crate::quadrature::{segment_circulation, tet_integral, triangle_flux};

pub use checks::{commuting_check, verify_complex, CommutingSquare, ComplexReport};
pub use incidence::{build_incidence, Incidence, SignedIncidence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Primal,
    Dual,
}

/// Physical meaning attached to cochain values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Role {
    Unspecified,
    /// Point values of a potential.
    Potential,
    /// Line integrals (velocity · length).
    Circulation,
    /// Surface integrals (velocity · area).
    Flux,
    /// Volume integrals.
    Density,
}

/// A vector of degrees of freedom attached to one family of mesh entities.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    side: Side,
    kind: EntityKind,
    role: Role,
    values: Vec<f64>,
}

impl Cochain {
    pub fn new(side: Side, kind: EntityKind, values: Vec<f64>) -> Self {
        Cochain {
            side,
            kind,
            role: Role::Unspecified,
            values,
        }
    }

    pub fn zeros(mesh: &PrimalMesh, side: Side, kind: EntityKind) -> Self {
        Cochain::new(side, kind, vec![0.0; entity_count(mesh, side, kind)])
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn side(&self) -> Side {
        self.side
    }
    pub fn kind(&self) -> EntityKind {
        self.kind
    }
    pub fn role(&self) -> Role {
        self.role
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks the length against the owning mesh.
    pub fn check(&self, mesh: &PrimalMesh) -> Result<()> {
        let n = entity_count(mesh, self.side, self.kind);
        if n != self.values.len() {
            return Err(Error::invalid(format!(
                "{:?} {:?} cochain has {} values, mesh has {n} entities",
                self.side,
                self.kind,
                self.values.len()
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Number of entities of `(side, kind)`; dual `k`-entities pair with primal `(3-k)`-entities.
pub fn entity_count(mesh: &PrimalMesh, side: Side, kind: EntityKind) -> usize {
    match side {
        Side::Primal => mesh.count(kind),
        Side::Dual => mesh.count(match kind {
            EntityKind::Vertex => EntityKind::Cell,
            EntityKind::Edge => EntityKind::Face,
            EntityKind::Face => EntityKind::Edge,
            EntityKind::Cell => EntityKind::Vertex,
        }),
    }
}

/// Shared closed-form scalar field.
pub type ScalarFn = std::sync::Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
/// Shared closed-form vector field.
pub type VectorFn = std::sync::Arc<dyn Fn(&Point) -> Vec3 + Send + Sync>;

/// A closed-form field handed to a reduction.
#[derive(Clone, Copy)]
pub enum Field<'a> {
    Scalar(&'a dyn Fn(&Point) -> f64),
    Vector(&'a dyn Fn(&Point) -> Vec3),
}

/// Integral of a scalar over primal cell `c` using its fan sub-tetrahedra.
pub fn cell_integral(mesh: &PrimalMesh, c: usize, g: &dyn Fn(&Point) -> f64) -> f64 {
    let xc = *mesh.cell_center(c);
    let mut acc = 0.0;
    for &(f, s) in mesh.cell_faces(c) {
        for [xf, a, b] in mesh.face_triangles(f) {
            acc += if s > 0 {
                tet_integral(&xc, &xf, &a, &b, g)
            } else {
                tet_integral(&xc, &xf, &b, &a, g)
            };
        }
    }
    acc
}

pub fn edge_circulation(mesh: &PrimalMesh, e: usize, u: &dyn Fn(&Point) -> Vec3) -> f64 {
    let [a, b] = mesh.edges()[e];
    segment_circulation(mesh.vertex(a), mesh.vertex(b), u)
}

pub fn face_flux(mesh: &PrimalMesh, f: usize, u: &dyn Fn(&Point) -> Vec3) -> f64 {
    mesh.face_triangles(f)
        .map(|[xf, a, b]| triangle_flux(&xf, &a, &b, u))
        .sum()
}

/// De Rham reduction of `field` onto the `(side, kind)` entities.
///
/// Vertices take point values, edges tangential circulations, faces normal
/// fluxes and cells volume integrals; dual entities use their barycentric
/// pieces plus the correction vectors of the dual mesh evaluated at the
/// associated primal entity point.
pub fn reduce(
    mesh: &PrimalMesh,
    dual: &DualMesh,
    field: Field<'_>,
    side: Side,
    kind: EntityKind,
) -> Result<Cochain> {
    use EntityKind::*;
    let values: Vec<f64> = match (side, kind, field) {
        (Side::Primal, Vertex, Field::Scalar(g)) => mesh.vertices().iter().map(g).collect(),
        (Side::Primal, Edge, Field::Vector(u)) => {
            (0..mesh.num_edges()).map(|e| edge_circulation(mesh, e, u)).collect()
        }
        (Side::Primal, Face, Field::Vector(u)) => {
            (0..mesh.num_faces()).map(|f| face_flux(mesh, f, u)).collect()
        }
        (Side::Primal, Cell, Field::Scalar(g)) => {
            (0..mesh.num_cells()).map(|c| cell_integral(mesh, c, g)).collect()
        }
        (Side::Dual, Vertex, Field::Scalar(g)) => {
            (0..mesh.num_cells()).map(|c| g(mesh.cell_center(c))).collect()
        }
        (Side::Dual, Edge, Field::Vector(u)) => (0..mesh.num_faces())
            .map(|f| {
                let raw: f64 = dual
                    .dual_edge_segments(mesh, f)
                    .iter()
                    .map(|[a, b]| segment_circulation(a, b, u))
                    .sum();
                raw + u(mesh.face_center(f)).dot(dual.dual_edge_correction(f))
            })
            .collect(),
        (Side::Dual, Face, Field::Vector(u)) => (0..mesh.num_edges())
            .map(|e| {
                let raw: f64 = dual
                    .dual_face_triangles(mesh, e)
                    .iter()
                    .map(|[a, b, c]| triangle_flux(a, b, c, u))
                    .sum();
                raw + u(mesh.edge_midpoint(e)).dot(dual.dual_face_correction(e))
            })
            .collect(),
        (Side::Dual, Cell, Field::Scalar(g)) => (0..mesh.num_vertices())
            .map(|v| {
                dual.dual_cell_tets(mesh, v)
                    .iter()
                    .map(|[a, b, c, d]| tet_integral(a, b, c, d, g))
                    .sum()
            })
            .collect(),
        (side, kind, field) => {
            let arity = match field {
                Field::Scalar(_) => "scalar",
                Field::Vector(_) => "vector",
            };
            return Err(Error::invalid(format!(
                "cannot reduce a {arity} field onto {side:?} {kind:?} entities"
            )));
        }
    };
    let role = match (side, kind) {
        (_, Vertex) => Role::Potential,
        (_, Edge) => Role::Circulation,
        (_, Face) => Role::Flux,
        (_, Cell) => Role::Density,
    };
    Ok(Cochain::new(side, kind, values).with_role(role))
}
