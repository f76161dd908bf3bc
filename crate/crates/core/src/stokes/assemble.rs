use sprs::CsMat;

use super::system::{BlockInfo, SaddleSystem};
use super::{BoundaryData, Scheme};
use crate::cochain::{edge_circulation, face_flux, Cochain, Incidence, Side};
use crate::error::{Error, Result};
use crate::hodge::{build_hodge, Coefficient, HodgeDesign, HodgeOperator, MaterialField, Pairing};
use crate::mesh::{DualMesh, EntityKind, PrimalMesh};
use crate::quadrature::{segment_circulation, triangle_flux};
use crate::sparse::TripletBuilder;

/// Mesh-level data shared by both schemes.
#[derive(Debug, Clone, Copy)]
pub struct SchemeContext<'a> {
    pub mesh: &'a PrimalMesh,
    pub dual: &'a DualMesh,
    pub inc: &'a Incidence,
    pub material: &'a MaterialField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Adds the zero-mean pressure multiplier.
    pub constraint: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { constraint: true }
    }
}

/// Hodge operators of one scheme.
#[derive(Debug, Clone)]
pub struct SchemeOperators {
    pub scheme: Scheme,
    /// Vertex-based: edges to dual faces. Cell-based: faces to dual edges.
    pub h_rho: HodgeOperator,
    /// Vertex-based: faces to dual edges. Cell-based: edges to dual faces.
    pub h_nu: HodgeOperator,
    pub h_cell: HodgeOperator,
}

impl SchemeOperators {
    pub fn build(ctx: &SchemeContext<'_>, scheme: Scheme, design: HodgeDesign, beta: f64) -> Result<Self> {
        let (rho_pairing, nu_pairing) = match scheme {
            Scheme::VertexBased => (Pairing::EdgeToDualFace, Pairing::FaceToDualEdge),
            Scheme::CellBased => (Pairing::FaceToDualEdge, Pairing::EdgeToDualFace),
        };
        let hodge = |p, c| build_hodge(ctx.mesh, ctx.dual, p, ctx.material, c, design, beta);
        Ok(SchemeOperators {
            scheme,
            h_rho: hodge(rho_pairing, Coefficient::Density)?,
            h_nu: hodge(nu_pairing, Coefficient::Viscosity)?,
            h_cell: hodge(Pairing::CellVolume, Coefficient::Density)?,
        })
    }
}

fn expect_hodge(h: &HodgeOperator, pairing: Pairing, n: usize, what: &str) -> Result<()> {
    if h.pairing() != pairing || h.dim() != n {
        return Err(Error::invalid(format!(
            "{what} must be a {pairing:?} operator of size {n}, got {:?} of size {}",
            h.pairing(),
            h.dim()
        )));
    }
    Ok(())
}

fn expect_load(load: &Cochain, kind: EntityKind, n: usize) -> Result<()> {
    if load.side() != Side::Dual || load.kind() != kind || load.len() != n {
        return Err(Error::invalid(format!(
            "momentum load must be a dual {kind:?} cochain of length {n}, got {:?} {:?} of length {}",
            load.side(),
            load.kind(),
            load.len()
        )));
    }
    Ok(())
}

fn expect_incidence(ctx: &SchemeContext<'_>) -> Result<()> {
    let m = ctx.mesh;
    let inc = ctx.inc;
    let ok = inc.grad.nrows() == m.num_edges()
        && inc.grad.ncols() == m.num_vertices()
        && inc.curl.nrows() == m.num_faces()
        && inc.div.nrows() == m.num_cells();
    if !ok || ctx.material.len() != m.num_cells() {
        return Err(Error::invalid("operators and material do not match the mesh"));
    }
    Ok(())
}

fn product(a: &CsMat<f64>, b: &CsMat<f64>) -> CsMat<f64> {
    (a * b).to_csr()
}

/// Assembles the vertex-based system.
///
/// Layout `[u (edges), p (vertices), λ]`:
///
/// ```text
/// [ Cᵀ H_ν C   H_ρ G   0 ] [u]   [ f̃ − b_ω ]
/// [ Gᵀ H_ρ     0       w ] [p] = [ g_n     ]
/// [ 0          wᵀ      0 ] [λ]   [ 0       ]
/// ```
///
/// `b_ω` is the viscous circulation of the vorticity trace along the boundary
/// segments of dual faces, `g_n` the outward flux of the velocity trace
/// through the boundary portions of dual cells and `w` the dual-cell volumes.
pub fn assemble_vertex_based(
    ctx: &SchemeContext<'_>,
    h_rho: &HodgeOperator,
    h_nu: &HodgeOperator,
    load: &Cochain,
    bc: &BoundaryData,
    opts: AssemblyOptions,
) -> Result<SaddleSystem> {
    let mesh = ctx.mesh;
    let dual = ctx.dual;
    let (ne, nv) = (mesh.num_edges(), mesh.num_vertices());
    expect_incidence(ctx)?;
    expect_hodge(h_rho, Pairing::EdgeToDualFace, ne, "H_rho")?;
    expect_hodge(h_nu, Pairing::FaceToDualEdge, mesh.num_faces(), "H_nu")?;
    expect_load(load, EntityKind::Face, ne)?;
    bc.require_supported()?;
    bc.check_compatibility(mesh)?;

    let g = ctx.inc.grad.to_f64();
    let c = ctx.inc.curl.to_f64();
    let ct = c.transpose_view().to_csr();
    let a = product(&product(&ct, h_nu.matrix()), &c);
    let hg = product(h_rho.matrix(), &g);

    let n = ne + nv + usize::from(opts.constraint);
    let mut b = TripletBuilder::new(n, n);
    b.add_block(0, 0, &a, 1.0);
    b.add_block(0, ne, &hg, 1.0);
    b.add_block_transposed(ne, 0, &hg, 1.0);
    let weights = dual.dual_cell_volumes().to_vec();
    if opts.constraint {
        for (v, &w) in weights.iter().enumerate() {
            b.add(ne + v, ne + nv, w);
            b.add(ne + nv, ne + v, w);
        }
    }

    let mut rhs = vec![0.0; n];
    rhs[..ne].copy_from_slice(load.values());
    if !bc.is_homogeneous() {
        let nu = ctx.material.values(Coefficient::Viscosity);
        let rho = ctx.material.values(Coefficient::Density);
        let omega = bc.vorticity();
        let vel = bc.velocity();
        for e in (0..ne).filter(|&e| mesh.is_boundary_edge(e)) {
            let b_e: f64 = dual
                .boundary_dual_face_segments(mesh, e)
                .iter()
                .map(|(cell, [p, q])| nu[*cell] * segment_circulation(p, q, &*omega))
                .sum();
            rhs[e] -= b_e;
        }
        for v in (0..nv).filter(|&v| mesh.is_boundary_vertex(v)) {
            rhs[ne + v] = dual
                .boundary_dual_cell_triangles(mesh, v)
                .iter()
                .map(|(cell, [p, q, r])| rho[*cell] * triangle_flux(p, q, r, &*vel))
                .sum();
        }
    }

    let mut blocks = vec![
        BlockInfo { name: "u", entity: Some(EntityKind::Edge), offset: 0, len: ne },
        BlockInfo { name: "p", entity: Some(EntityKind::Vertex), offset: ne, len: nv },
    ];
    if opts.constraint {
        blocks.push(BlockInfo { name: "lambda", entity: None, offset: ne + nv, len: 1 });
    }
    Ok(SaddleSystem::new(
        Scheme::VertexBased,
        b.build(),
        rhs,
        vec![None; n],
        blocks,
        opts.constraint,
        weights,
    ))
}

/// Assembles the cell-based system.
///
/// Layout `[ω (edges), u (faces), p (cells), λ]`:
///
/// ```text
/// [ −H_ν     Cᵀ H_ρ   0    0 ] [ω]   [ 0  ]
/// [ H_ρ C    0        −Dᵀ  0 ] [u]   [ f̃  ]
/// [ 0        −D       0    w ] [p] = [ 0  ]
/// [ 0        0        wᵀ   0 ] [λ]   [ 0  ]
/// ```
///
/// `p` holds pressure values at cell centers and `w` the cell volumes.
/// Boundary edge circulations and boundary face fluxes are essential and are
/// eliminated symmetrically.
pub fn assemble_cell_based(
    ctx: &SchemeContext<'_>,
    h_nu: &HodgeOperator,
    h_rho: &HodgeOperator,
    h_cell: &HodgeOperator,
    load: &Cochain,
    bc: &BoundaryData,
    opts: AssemblyOptions,
) -> Result<SaddleSystem> {
    let mesh = ctx.mesh;
    let (ne, nf, nc) = (mesh.num_edges(), mesh.num_faces(), mesh.num_cells());
    expect_incidence(ctx)?;
    expect_hodge(h_nu, Pairing::EdgeToDualFace, ne, "H_nu")?;
    expect_hodge(h_rho, Pairing::FaceToDualEdge, nf, "H_rho")?;
    expect_hodge(h_cell, Pairing::CellVolume, nc, "H_C")?;
    expect_load(load, EntityKind::Edge, nf)?;
    bc.require_supported()?;
    bc.check_compatibility(mesh)?;

    let c = ctx.inc.curl.to_f64();
    let d = ctx.inc.div.to_f64();
    let hc = product(h_rho.matrix(), &c);

    let (ou, op) = (ne, ne + nf);
    let n = ne + nf + nc + usize::from(opts.constraint);
    let mut b = TripletBuilder::new(n, n);
    b.add_block(0, 0, h_nu.matrix(), -1.0);
    b.add_block_transposed(0, ou, &hc, 1.0);
    b.add_block(ou, 0, &hc, 1.0);
    b.add_block_transposed(ou, op, &d, -1.0);
    b.add_block(op, ou, &d, -1.0);
    let weights = h_cell.diagonal();
    if opts.constraint {
        for (k, &w) in weights.iter().enumerate() {
            b.add(op + k, op + nc, w);
            b.add(op + nc, op + k, w);
        }
    }

    let mut rhs = vec![0.0; n];
    rhs[ou..op].copy_from_slice(load.values());

    let mut fixed = vec![None; n];
    let omega = bc.vorticity();
    let vel = bc.velocity();
    let homogeneous = bc.is_homogeneous();
    for e in (0..ne).filter(|&e| mesh.is_boundary_edge(e)) {
        fixed[e] = Some(if homogeneous { 0.0 } else { edge_circulation(mesh, e, &*omega) });
    }
    for f in (0..nf).filter(|&f| mesh.is_boundary_face(f)) {
        fixed[ou + f] = Some(if homogeneous { 0.0 } else { face_flux(mesh, f, &*vel) });
    }

    let mut blocks = vec![
        BlockInfo { name: "omega", entity: Some(EntityKind::Edge), offset: 0, len: ne },
        BlockInfo { name: "u", entity: Some(EntityKind::Face), offset: ou, len: nf },
        BlockInfo { name: "p", entity: Some(EntityKind::Cell), offset: op, len: nc },
    ];
    if opts.constraint {
        blocks.push(BlockInfo { name: "lambda", entity: None, offset: op + nc, len: 1 });
    }
    Ok(SaddleSystem::new(
        Scheme::CellBased,
        b.build(),
        rhs,
        fixed,
        blocks,
        opts.constraint,
        weights,
    ))
}

/// Dispatches on the scheme of `ops`.
pub fn assemble(
    ctx: &SchemeContext<'_>,
    ops: &SchemeOperators,
    load: &Cochain,
    bc: &BoundaryData,
    opts: AssemblyOptions,
) -> Result<SaddleSystem> {
    match ops.scheme {
        Scheme::VertexBased => assemble_vertex_based(ctx, &ops.h_rho, &ops.h_nu, load, bc, opts),
        Scheme::CellBased => assemble_cell_based(ctx, &ops.h_nu, &ops.h_rho, &ops.h_cell, load, bc, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cochain::{build_incidence, reduce, Field};
    use crate::geometry::{Point, Vec3};
    use crate::mesh::{build_cartesian_hex, build_dual, build_tet_mesh, BoundingBox};
    use crate::sparse::symmetry_defect;

    /// Stokes theorem on each dual face: flux of curl W equals the dual-edge
    /// circulations combined by Cᵀ plus the boundary segments.
    #[test]
    fn dual_face_boundaries_match_transposed_curl() {
        for m in [
            build_cartesian_hex(2, 2, 2, BoundingBox::unit()).unwrap(),
            build_tet_mesh(2, 1, 1, BoundingBox::unit()).unwrap(),
        ] {
            let d = build_dual(&m).unwrap();
            let inc = build_incidence(&m);
            let w = |x: &Point| Vec3::new(x.y * x.z, 2.0 * x.x - x.z, x.x * x.y + x.y);
            let curl_w = |x: &Point| Vec3::new(x.x + 1.0 + 1.0, x.y - x.y, 2.0 - x.z);
            let flux = reduce(&m, &d, Field::Vector(&curl_w), Side::Dual, EntityKind::Face).unwrap();
            let circ = reduce(&m, &d, Field::Vector(&w), Side::Dual, EntityKind::Edge).unwrap();
            let ct = inc.dual_curl().apply(circ.values());
            for e in 0..m.num_edges() {
                let bnd: f64 = d
                    .boundary_dual_face_segments(&m, e)
                    .iter()
                    .map(|(_, [p, q])| segment_circulation(p, q, &w))
                    .sum();
                assert!((ct[e] + bnd - flux.values()[e]).abs() < 1e-13, "edge {e}");
            }
        }
    }

    /// Divergence theorem on each dual cell with the `Gᵀ` sign convention.
    #[test]
    fn dual_cell_boundaries_match_transposed_gradient() {
        let m = build_tet_mesh(2, 2, 1, BoundingBox::unit()).unwrap();
        let d = build_dual(&m).unwrap();
        let inc = build_incidence(&m);
        let u = |x: &Point| Vec3::new(x.x * x.y, x.z - x.y, 3.0 * x.z);
        let div = |x: &Point| x.y - 1.0 + 3.0;
        let flux = reduce(&m, &d, Field::Vector(&u), Side::Dual, EntityKind::Face).unwrap();
        let vol = reduce(&m, &d, Field::Scalar(&div), Side::Dual, EntityKind::Cell).unwrap();
        let gt = inc.dual_div().apply(flux.values());
        for v in 0..m.num_vertices() {
            let bnd: f64 = d
                .boundary_dual_cell_triangles(&m, v)
                .iter()
                .map(|(_, [p, q, r])| triangle_flux(p, q, r, &u))
                .sum();
            assert!((-gt[v] + bnd - vol.values()[v]).abs() < 1e-13, "vertex {v}");
        }
    }

    fn context_parts(n: usize) -> (PrimalMesh, DualMesh, Incidence, MaterialField) {
        let m = build_cartesian_hex(n, n, n, BoundingBox::unit()).unwrap();
        let d = build_dual(&m).unwrap();
        let inc = build_incidence(&m);
        let mat = MaterialField::unit(&m);
        (m, d, inc, mat)
    }

    #[test]
    fn sizes_and_symmetry() {
        let (m, d, inc, mat) = context_parts(2);
        let ctx = SchemeContext { mesh: &m, dual: &d, inc: &inc, material: &mat };
        for scheme in [Scheme::VertexBased, Scheme::CellBased] {
            let ops = SchemeOperators::build(&ctx, scheme, HodgeDesign::ConsistentStabilized, 1.0).unwrap();
            let kind = match scheme {
                Scheme::VertexBased => EntityKind::Face,
                Scheme::CellBased => EntityKind::Edge,
            };
            let load = Cochain::zeros(&m, Side::Dual, kind);
            let sys = assemble(&ctx, &ops, &load, &BoundaryData::homogeneous(), AssemblyOptions::default()).unwrap();
            let expected = match scheme {
                Scheme::VertexBased => 27 + 54 + 1,
                Scheme::CellBased => 54 + 36 + 8 + 1,
            };
            assert_eq!(sys.dim(), expected);
            assert!(symmetry_defect(sys.matrix()) <= 1e-13);
            assert!(symmetry_defect(sys.reduced_matrix()) <= 1e-13);
        }
    }

    #[test]
    fn shape_mismatch_is_invalid() {
        let (m, d, inc, mat) = context_parts(1);
        let ctx = SchemeContext { mesh: &m, dual: &d, inc: &inc, material: &mat };
        let ops = SchemeOperators::build(&ctx, Scheme::VertexBased, HodgeDesign::Diagonal, 1.0).unwrap();
        let load = Cochain::zeros(&m, Side::Dual, EntityKind::Face);
        let err = assemble_vertex_based(&ctx, &ops.h_nu, &ops.h_rho, &load, &BoundaryData::homogeneous(), AssemblyOptions::default());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }
}
