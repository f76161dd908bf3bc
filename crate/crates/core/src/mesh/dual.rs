//! Barycentric dual mesh.
//!
//! Dual vertices are primal cell centers, the dual edge of a face joins the
//! centers of its cells through the face point, the dual face of an edge is
//! the union of the triangles `(x_e, x_f, x_c)` over the faces and cells
//! around the edge, and the dual cell of a vertex collects the sub-volumes
//! `(x_c, x_f, v, x_e)`. Dual entities attached to the boundary are clipped
//! at the boundary.
//!
//! The per-cell portions used by the Hodge operators satisfy
//! `Σ_e t_e ⊗ S̃_{e,c} = |c| I` and `Σ_f A_f ⊗ d̃_{f,c} = |c| I` exactly.
//! On planar faces whose vertex mean is the area centroid this holds for the
//! raw barycentric geometry. For warped or irregular faces a minimum-norm
//! correction is added: a per-face term on dual-face portions (it cancels
//! between the two cells of an interior face) and a per-cell term on
//! dual-edge portions.

use nalgebra::Matrix3;

use super::PrimalMesh;
use crate::error::{Error, Result};
use crate::geometry::{min_norm_outer_solve, outer, triangle_area_vector, Point, Vec3};

#[derive(Debug, Clone)]
pub struct DualMesh {
    counts: [usize; 4],
    /// `(cell, face, sign)` triples building each dual face, one per triangle
    /// `(x_e, x_f, x_c)`.
    edge_pieces: Vec<Vec<(usize, usize, f64)>>,
    vertex_cells: Vec<Vec<usize>>,
    face_portions: Vec<Vec<Vec3>>,
    edge_portions: Vec<Vec<Vec3>>,
    dual_face_area: Vec<Vec3>,
    dual_face_correction: Vec<Vec3>,
    dual_edge_vector: Vec<Vec3>,
    dual_edge_correction: Vec<Vec3>,
    dual_cell_volume: Vec<f64>,
}

/// Invariant diagnostics for a dual mesh.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DualReport {
    pub dual_vertices: usize,
    pub dual_edges: usize,
    pub dual_faces: usize,
    pub dual_cells: usize,
    pub volume_relative_error: f64,
    pub max_perot_residual_faces: f64,
    pub max_perot_residual_edges: f64,
    /// Smallest `S̃_e · t_e / (|S̃_e| |t_e|)`; positive when every dual face is
    /// oriented along its edge.
    pub min_orientation_cosine: f64,
}

fn local_index(list: &[usize], item: usize) -> usize {
    list.binary_search(&item).expect("entity belongs to the cell")
}

impl DualMesh {
    pub fn build(mesh: &PrimalMesh) -> Result<Self> {
        let (nv, ne, nf, nc) = (
            mesh.num_vertices(),
            mesh.num_edges(),
            mesh.num_faces(),
            mesh.num_cells(),
        );
        for f in 0..nf {
            if mesh.face_cells(f).len() > 2 || mesh.face_cells(f).is_empty() {
                return Err(Error::InvalidMesh(format!("face {f} is non-manifold")));
            }
        }

        let mut edge_pieces = vec![Vec::new(); ne];
        let mut vertex_cells = vec![Vec::new(); nv];
        let mut face_portions = Vec::with_capacity(nc);
        for c in 0..nc {
            let edges = mesh.cell_edges(c);
            let mut portions = vec![Vec3::zeros(); edges.len()];
            let xc = mesh.cell_center(c);
            for &(f, s) in mesh.cell_faces(c) {
                let xf = mesh.face_center(f);
                for &(e, loop_sign) in mesh.face_edges(f) {
                    let sign = -(loop_sign as f64) * s as f64;
                    let xe = mesh.edge_midpoint(e);
                    portions[local_index(edges, e)] += sign * triangle_area_vector(xe, xf, xc);
                    edge_pieces[e].push((c, f, sign));
                }
            }
            for &v in mesh.cell_vertices(c) {
                vertex_cells[v].push(c);
            }
            face_portions.push(portions);
        }
        let geometric_face_area: Vec<Vec3> = edge_pieces
            .iter()
            .enumerate()
            .map(|(e, pieces)| {
                pieces
                    .iter()
                    .map(|&(c, f, sign)| {
                        sign * triangle_area_vector(
                            mesh.edge_midpoint(e),
                            mesh.face_center(f),
                            mesh.cell_center(c),
                        )
                    })
                    .sum()
            })
            .collect();

        // Per-face correction of the dual-face portions.
        for f in 0..nf {
            let xf = mesh.face_center(f);
            let mut defect = Matrix3::zeros();
            for [_, a, b] in mesh.face_triangles(f) {
                let centroid = (xf + a + b) / 3.0;
                defect += outer(&(centroid - xf), &triangle_area_vector(xf, &a, &b));
            }
            if defect.norm() <= 1e-15 * mesh.face_area_vector(f).norm().powf(1.5) {
                continue;
            }
            let rows: Vec<Vec3> = mesh.face_edges(f).iter().map(|&(e, _)| *mesh.edge_vector(e)).collect();
            let delta = min_norm_outer_solve(&rows, &(-0.5 * defect));
            for &(c, s) in mesh.face_cells(f) {
                let edges = mesh.cell_edges(c);
                for (&(e, _), d) in mesh.face_edges(f).iter().zip(&delta) {
                    face_portions[c][local_index(edges, e)] += s as f64 * d;
                }
            }
        }

        let mut edge_portions = Vec::with_capacity(nc);
        for c in 0..nc {
            let vol = mesh.cell_volume(c);
            let edges = mesh.cell_edges(c);
            // Roundoff-level cleanup so the identity holds to machine precision.
            let rows: Vec<Vec3> = edges.iter().map(|&e| *mesh.edge_vector(e)).collect();
            let mut m = Matrix3::zeros();
            for (t, s) in rows.iter().zip(&face_portions[c]) {
                m += outer(t, s);
            }
            let delta = min_norm_outer_solve(&rows, &(Matrix3::identity() * vol - m));
            for (p, d) in face_portions[c].iter_mut().zip(&delta) {
                *p += d;
            }

            let xc = mesh.cell_center(c);
            let faces = mesh.cell_faces(c);
            let mut portions: Vec<Vec3> =
                faces.iter().map(|&(f, s)| s as f64 * (mesh.face_center(f) - xc)).collect();
            let rows: Vec<Vec3> = faces.iter().map(|&(f, _)| *mesh.face_area_vector(f)).collect();
            let mut m = Matrix3::zeros();
            for (a, d) in rows.iter().zip(&portions) {
                m += outer(a, d);
            }
            let delta = min_norm_outer_solve(&rows, &(Matrix3::identity() * vol - m));
            for (p, d) in portions.iter_mut().zip(&delta) {
                *p += d;
            }
            edge_portions.push(portions);
        }

        let mut dual_face_area = vec![Vec3::zeros(); ne];
        let mut dual_edge_vector = vec![Vec3::zeros(); nf];
        let mut dual_cell_volume = vec![0.0; nv];
        for c in 0..nc {
            for (&e, p) in mesh.cell_edges(c).iter().zip(&face_portions[c]) {
                dual_face_area[e] += p;
            }
            let xc = mesh.cell_center(c);
            for (&(f, s), d) in mesh.cell_faces(c).iter().zip(&edge_portions[c]) {
                dual_edge_vector[f] += d;
                let lp = &mesh.faces()[f];
                let xf = mesh.face_center(f);
                for i in 0..lp.len() {
                    let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                    let area = triangle_area_vector(xf, mesh.vertex(a), mesh.vertex(b));
                    let half = 0.5 * s as f64 * area.dot(&(xf - xc)) / 3.0;
                    dual_cell_volume[a] += half;
                    dual_cell_volume[b] += half;
                }
            }
        }
        let dual_face_correction = dual_face_area
            .iter()
            .zip(&geometric_face_area)
            .map(|(t, g)| t - g)
            .collect();
        let dual_edge_correction = (0..nf)
            .map(|f| {
                let geo: Vec3 = mesh
                    .face_cells(f)
                    .iter()
                    .map(|&(c, s)| s as f64 * (mesh.face_center(f) - mesh.cell_center(c)))
                    .sum();
                dual_edge_vector[f] - geo
            })
            .collect();

        Ok(DualMesh {
            counts: [nv, ne, nf, nc],
            edge_pieces,
            vertex_cells,
            face_portions,
            edge_portions,
            dual_face_area,
            dual_face_correction,
            dual_edge_vector,
            dual_edge_correction,
            dual_cell_volume,
        })
    }

    fn check_mesh(&self, mesh: &PrimalMesh) {
        debug_assert_eq!(
            self.counts,
            [mesh.num_vertices(), mesh.num_edges(), mesh.num_faces(), mesh.num_cells()],
            "dual mesh used with a different primal mesh"
        );
    }

    pub fn num_dual_vertices(&self) -> usize {
        self.counts[3]
    }
    pub fn num_dual_edges(&self) -> usize {
        self.counts[2]
    }
    pub fn num_dual_faces(&self) -> usize {
        self.counts[1]
    }
    pub fn num_dual_cells(&self) -> usize {
        self.counts[0]
    }

    /// Area vector of the dual face of primal edge `e`, oriented along `e`.
    pub fn dual_face_area(&self, e: usize) -> &Vec3 {
        &self.dual_face_area[e]
    }
    /// Part of the dual-face area vector not carried by the barycentric triangles.
    pub fn dual_face_correction(&self, e: usize) -> &Vec3 {
        &self.dual_face_correction[e]
    }
    /// Vector of the dual edge of primal face `f`, oriented along the face normal.
    pub fn dual_edge_vector(&self, f: usize) -> &Vec3 {
        &self.dual_edge_vector[f]
    }
    pub fn dual_edge_correction(&self, f: usize) -> &Vec3 {
        &self.dual_edge_correction[f]
    }
    pub fn dual_cell_volume(&self, v: usize) -> f64 {
        self.dual_cell_volume[v]
    }
    pub fn dual_cell_volumes(&self) -> &[f64] {
        &self.dual_cell_volume
    }
    /// Dual-face portions inside cell `c`, aligned with `mesh.cell_edges(c)`.
    pub fn cell_face_portions(&self, c: usize) -> &[Vec3] {
        &self.face_portions[c]
    }
    /// Dual-edge portions inside cell `c`, aligned with `mesh.cell_faces(c)`.
    pub fn cell_edge_portions(&self, c: usize) -> &[Vec3] {
        &self.edge_portions[c]
    }
    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    /// Oriented triangles of the dual face of edge `e`.
    pub fn dual_face_triangles(&self, mesh: &PrimalMesh, e: usize) -> Vec<[Point; 3]> {
        self.check_mesh(mesh);
        let xe = *mesh.edge_midpoint(e);
        self.edge_pieces[e]
            .iter()
            .map(|&(c, f, sign)| {
                let (xf, xc) = (*mesh.face_center(f), *mesh.cell_center(c));
                if sign > 0.0 {
                    [xe, xf, xc]
                } else {
                    [xe, xc, xf]
                }
            })
            .collect()
    }

    /// Oriented segments of the dual edge of face `f`.
    pub fn dual_edge_segments(&self, mesh: &PrimalMesh, f: usize) -> Vec<[Point; 2]> {
        self.check_mesh(mesh);
        let xf = *mesh.face_center(f);
        mesh.face_cells(f)
            .iter()
            .map(|&(c, s)| {
                let xc = *mesh.cell_center(c);
                if s > 0 {
                    [xc, xf]
                } else {
                    [xf, xc]
                }
            })
            .collect()
    }

    /// Sub-tetrahedra `(x_c, x_f, p, q)` of the dual cell of vertex `v`; the
    /// signed volume of each is its contribution to the dual-cell volume.
    pub fn dual_cell_tets(&self, mesh: &PrimalMesh, v: usize) -> Vec<[Point; 4]> {
        self.check_mesh(mesh);
        let x = mesh.vertex(v);
        let mut out = Vec::new();
        for &c in &self.vertex_cells[v] {
            let xc = *mesh.cell_center(c);
            for &(f, s) in mesh.cell_faces(c) {
                let lp = &mesh.faces()[f];
                let Some(i) = lp.iter().position(|&w| w == v) else {
                    continue;
                };
                let n = lp.len();
                let xf = *mesh.face_center(f);
                let next = 0.5 * (x + mesh.vertex(lp[(i + 1) % n]));
                let prev = 0.5 * (x + mesh.vertex(lp[(i + n - 1) % n]));
                // (x_f, prev, v) and (x_f, v, next) follow the loop orientation.
                if s > 0 {
                    out.push([xc, xf, prev, *x]);
                    out.push([xc, xf, *x, next]);
                } else {
                    out.push([xc, xf, *x, prev]);
                    out.push([xc, xf, next, *x]);
                }
            }
        }
        out
    }

    /// Outward-oriented boundary triangles closing the dual cell of a boundary
    /// vertex, each with the primal cell owning its boundary face.
    pub fn boundary_dual_cell_triangles(&self, mesh: &PrimalMesh, v: usize) -> Vec<(usize, [Point; 3])> {
        self.check_mesh(mesh);
        let x = *mesh.vertex(v);
        let mut out = Vec::new();
        for &c in &self.vertex_cells[v] {
            for &(f, s) in mesh.cell_faces(c) {
                if !mesh.is_boundary_face(f) {
                    continue;
                }
                let lp = &mesh.faces()[f];
                let Some(i) = lp.iter().position(|&w| w == v) else {
                    continue;
                };
                let n = lp.len();
                let xf = *mesh.face_center(f);
                let next = 0.5 * (x + mesh.vertex(lp[(i + 1) % n]));
                let prev = 0.5 * (x + mesh.vertex(lp[(i + n - 1) % n]));
                if s > 0 {
                    out.push((c, [xf, prev, x]));
                    out.push((c, [xf, x, next]));
                } else {
                    out.push((c, [xf, x, prev]));
                    out.push((c, [xf, next, x]));
                }
            }
        }
        out
    }

    /// Boundary segments closing the dual face of a boundary edge, oriented
    /// so that together with the dual edges they circulate around the edge
    /// tangent. Each segment comes with the primal cell owning its boundary face.
    pub fn boundary_dual_face_segments(&self, mesh: &PrimalMesh, e: usize) -> Vec<(usize, [Point; 2])> {
        self.check_mesh(mesh);
        let xe = *mesh.edge_midpoint(e);
        let mut out = Vec::new();
        for &(_, f, _) in &self.edge_pieces[e] {
            if !mesh.is_boundary_face(f) {
                continue;
            }
            // Each boundary face of the edge shows up once per adjacent cell,
            // which is exactly once.
            let (c, s) = mesh.face_cells(f)[0];
            let loop_sign = mesh
                .face_edges(f)
                .iter()
                .find(|&&(g, _)| g == e)
                .map(|&(_, o)| o)
                .expect("edge on face");
            let xf = *mesh.face_center(f);
            if loop_sign * s > 0 {
                out.push((c, [xf, xe]));
            } else {
                out.push((c, [xe, xf]));
            }
        }
        out
    }

    /// Largest relative residuals of both per-cell identities.
    pub fn perot_residuals(&self, mesh: &PrimalMesh) -> (f64, f64) {
        self.check_mesh(mesh);
        let mut worst_faces: f64 = 0.0;
        let mut worst_edges: f64 = 0.0;
        for c in 0..mesh.num_cells() {
            let vol = mesh.cell_volume(c);
            let mut m = Matrix3::zeros();
            for (&e, s) in mesh.cell_edges(c).iter().zip(&self.face_portions[c]) {
                m += outer(mesh.edge_vector(e), s);
            }
            worst_faces = worst_faces.max((m - Matrix3::identity() * vol).amax() / vol);
            let mut m = Matrix3::zeros();
            for (&(f, _), d) in mesh.cell_faces(c).iter().zip(&self.edge_portions[c]) {
                m += outer(mesh.face_area_vector(f), d);
            }
            worst_edges = worst_edges.max((m - Matrix3::identity() * vol).amax() / vol);
        }
        (worst_faces, worst_edges)
    }

    pub fn report(&self, mesh: &PrimalMesh) -> DualReport {
        let (pf, pe) = self.perot_residuals(mesh);
        let vol: f64 = self.dual_cell_volume.iter().sum();
        let total = mesh.total_volume();
        let min_cos = (0..mesh.num_edges())
            .map(|e| {
                let s = self.dual_face_area[e];
                s.dot(mesh.edge_vector(e)) / (s.norm() * mesh.edge_length(e))
            })
            .fold(f64::INFINITY, f64::min);
        DualReport {
            dual_vertices: self.num_dual_vertices(),
            dual_edges: self.num_dual_edges(),
            dual_faces: self.num_dual_faces(),
            dual_cells: self.num_dual_cells(),
            volume_relative_error: (vol - total).abs() / total,
            max_perot_residual_faces: pf,
            max_perot_residual_edges: pe,
            min_orientation_cosine: min_cos,
        }
    }
}

/// Builds the barycentric dual of `mesh`.
pub fn build_dual(mesh: &PrimalMesh) -> Result<DualMesh> {
    DualMesh::build(mesh)
}
