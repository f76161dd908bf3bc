//! Primal polyhedral meshes, their generators and I/O, and the barycentric
//! dual mesh.
//!
//! Orientation conventions:
//! - edge tangents point from the lower to the higher vertex index;
//! - a face normal follows its vertex loop by the right-hand rule;
//! - a cell stores each of its faces with sign `+1` when the face normal
//!   points out of the cell.
//!
//! Face geometry is the barycenter-fan triangulation: the face point is the
//! arithmetic mean of the loop vertices and every area, normal and quadrature
//! uses the triangles `(x_f, v_i, v_{i+1})`.

mod dual;
mod generate;
mod io;
mod vtk;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{mean_point, triangle_area_vector, Point, Vec3};

pub use dual::{build_dual, DualMesh, DualReport};
pub use generate::{build_cartesian_hex, build_tet_mesh, perturb_mesh, BoundingBox};
pub use io::{load_mesh_json, mesh_from_json_str, mesh_to_json_string, save_mesh_json};
pub use vtk::{export_vtk, NamedField};

/// Entity kinds of a three-dimensional cell complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Vertex,
    Edge,
    Face,
    Cell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalMesh {
    name: Option<String>,
    vertices: Vec<Point>,
    edges: Vec<[usize; 2]>,
    faces: Vec<Vec<usize>>,
    /// Edges of each face in loop order, with `+1` when the loop runs along
    /// the edge tangent.
    face_edges: Vec<Vec<(usize, i8)>>,
    cells: Vec<Vec<(usize, i8)>>,
    face_cells: Vec<Vec<(usize, i8)>>,
    cell_edges: Vec<Vec<usize>>,
    cell_vertices: Vec<Vec<usize>>,
    vertex_on_boundary: Vec<bool>,
    edge_on_boundary: Vec<bool>,
    geom: Geometry,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Geometry {
    edge_vector: Vec<Vec3>,
    edge_length: Vec<f64>,
    edge_midpoint: Vec<Point>,
    face_center: Vec<Point>,
    face_area: Vec<Vec3>,
    cell_center: Vec<Point>,
    cell_volume: Vec<f64>,
    cell_diameter: Vec<f64>,
}

/// Invariant diagnostics of one mesh instance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MeshReport {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub cells: usize,
    pub euler_characteristic: i64,
    pub total_volume: f64,
    pub min_volume: f64,
    /// Worst closed-surface residual `|Σ_f s_f A_f| / Σ_f |A_f|` over cells.
    pub max_closure_residual: f64,
    pub quality: MeshQuality,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeshQuality {
    pub min_volume: f64,
    /// Largest `h_c / |c|^{1/3}`.
    pub max_aspect: f64,
}

impl PrimalMesh {
    /// Builds a mesh from vertex coordinates, face vertex loops and signed
    /// cell face lists, deriving edges (numbered lexicographically by vertex
    /// pair) and all geometric measures.
    pub fn from_topology(
        name: Option<String>,
        vertices: Vec<Point>,
        faces: Vec<Vec<usize>>,
        cells: Vec<Vec<(usize, i8)>>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        if let Some(i) = vertices.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} has non-finite coordinates")));
        }

        let mut seen_faces: HashMap<Vec<usize>, usize> = HashMap::new();
        for (f, lp) in faces.iter().enumerate() {
            if lp.len() < 3 {
                return Err(Error::InvalidMesh(format!("face {f} has fewer than 3 vertices")));
            }
            for &v in lp {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "face {f} references vertex {v} of {nv}"
                    )));
                }
            }
            let mut key = lp.clone();
            key.sort_unstable();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh(format!("face {f} repeats a vertex")));
            }
            if let Some(g) = seen_faces.insert(key, f) {
                return Err(Error::InvalidMesh(format!("faces {g} and {f} coincide")));
            }
        }

        let mut edge_pairs: Vec<[usize; 2]> = faces
            .iter()
            .flat_map(|lp| {
                (0..lp.len()).map(move |i| {
                    let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                    [a.min(b), a.max(b)]
                })
            })
            .collect();
        edge_pairs.sort_unstable();
        edge_pairs.dedup();
        let edge_index: HashMap<[usize; 2], usize> =
            edge_pairs.iter().enumerate().map(|(i, &e)| (e, i)).collect();

        let face_edges: Vec<Vec<(usize, i8)>> = faces
            .iter()
            .map(|lp| {
                (0..lp.len())
                    .map(|i| {
                        let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                        let e = edge_index[&[a.min(b), a.max(b)]];
                        (e, if a < b { 1 } else { -1 })
                    })
                    .collect()
            })
            .collect();

        let nf = faces.len();
        let mut face_cells = vec![Vec::new(); nf];
        for (c, cf) in cells.iter().enumerate() {
            if cf.is_empty() {
                return Err(Error::InvalidMesh(format!("cell {c} has no faces")));
            }
            for &(f, s) in cf {
                if f >= nf {
                    return Err(Error::InvalidMesh(format!(
                        "cell {c} references face {f} of {nf}"
                    )));
                }
                if s != 1 && s != -1 {
                    return Err(Error::InvalidMesh(format!("cell {c} has face sign {s}")));
                }
                face_cells[f].push((c, s));
            }
        }
        for (f, fc) in face_cells.iter().enumerate() {
            match fc.as_slice() {
                [_] => {}
                [(_, s1), (_, s2)] if s1 != s2 => {}
                [_, _] => {
                    return Err(Error::InvalidMesh(format!(
                        "face {f} is shared by two cells with the same orientation"
                    )))
                }
                [] => return Err(Error::InvalidMesh(format!("face {f} belongs to no cell"))),
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "face {f} belongs to {} cells (non-manifold)",
                        fc.len()
                    )))
                }
            }
        }

        // A cell is closed when each of its edges is traversed once in each
        // direction by its outward-oriented face loops.
        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut cell_vertices = Vec::with_capacity(cells.len());
        for (c, cf) in cells.iter().enumerate() {
            let mut count: HashMap<usize, (u32, i32)> = HashMap::new();
            let mut verts = Vec::new();
            for &(f, s) in cf {
                for &(e, o) in &face_edges[f] {
                    let entry = count.entry(e).or_insert((0, 0));
                    entry.0 += 1;
                    entry.1 += (o as i32) * (s as i32);
                }
                verts.extend_from_slice(&faces[f]);
            }
            if count.values().any(|&(n, sum)| n != 2 || sum != 0) {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} is not a closed, consistently oriented surface"
                )));
            }
            let mut edges: Vec<usize> = count.into_keys().collect();
            edges.sort_unstable();
            verts.sort_unstable();
            verts.dedup();
            cell_edges.push(edges);
            cell_vertices.push(verts);
        }

        let mut vertex_on_boundary = vec![false; nv];
        let mut edge_on_boundary = vec![false; edge_pairs.len()];
        for f in 0..nf {
            if face_cells[f].len() == 1 {
                for &v in &faces[f] {
                    vertex_on_boundary[v] = true;
                }
                for &(e, _) in &face_edges[f] {
                    edge_on_boundary[e] = true;
                }
            }
        }

        let mut mesh = PrimalMesh {
            name,
            vertices,
            edges: edge_pairs,
            faces,
            face_edges,
            cells,
            face_cells,
            cell_edges,
            cell_vertices,
            vertex_on_boundary,
            edge_on_boundary,
            geom: Geometry::default(),
        };
        mesh.recompute_geometry()?;
        Ok(mesh)
    }

    pub(crate) fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        let mut mesh = self.clone();
        mesh.vertices = vertices;
        mesh.recompute_geometry()?;
        Ok(mesh)
    }

    fn recompute_geometry(&mut self) -> Result<()> {
        let x = &self.vertices;
        let mut g = Geometry::default();
        for &[a, b] in &self.edges {
            let v = x[b] - x[a];
            g.edge_length.push(v.norm());
            g.edge_vector.push(v);
            g.edge_midpoint.push(0.5 * (x[a] + x[b]));
        }
        for (e, &l) in g.edge_length.iter().enumerate() {
            if l <= 0.0 {
                return Err(Error::DegenerateMesh(format!("edge {e} has zero length")));
            }
        }
        for lp in &self.faces {
            let xf = mean_point(lp.iter().map(|&v| &x[v]));
            let area = (0..lp.len())
                .map(|i| triangle_area_vector(&xf, &x[lp[i]], &x[lp[(i + 1) % lp.len()]]))
                .sum::<Vec3>();
            g.face_center.push(xf);
            g.face_area.push(area);
        }
        for (c, cf) in self.cells.iter().enumerate() {
            let xc = mean_point(self.cell_vertices[c].iter().map(|&v| &x[v]));
            let mut vol = 0.0;
            for &(f, s) in cf {
                let xf = g.face_center[f];
                vol += s as f64 * g.face_area[f].dot(&(xf - xc)) / 3.0;
            }
            if !(vol > 0.0) {
                return Err(Error::DegenerateMesh(format!("cell {c} has volume {vol:e}")));
            }
            let verts = &self.cell_vertices[c];
            let mut diam: f64 = 0.0;
            for (i, &a) in verts.iter().enumerate() {
                for &b in &verts[i + 1..] {
                    diam = diam.max((x[a] - x[b]).norm());
                }
            }
            g.cell_center.push(xc);
            g.cell_volume.push(vol);
            g.cell_diameter.push(diam);
        }
        self.geom = g;
        Ok(())
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn set_name(&mut self, name: Option<String>) {
        self.name = name;
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn count(&self, kind: EntityKind) -> usize {
        match kind {
            EntityKind::Vertex => self.num_vertices(),
            EntityKind::Edge => self.num_edges(),
            EntityKind::Face => self.num_faces(),
            EntityKind::Cell => self.num_cells(),
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
            - self.num_cells() as i64
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }
    pub fn vertex(&self, v: usize) -> &Point {
        &self.vertices[v]
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }
    /// Edges of face `f` in loop order with their orientation relative to the loop.
    pub fn face_edges(&self, f: usize) -> &[(usize, i8)] {
        &self.face_edges[f]
    }
    pub fn cells(&self) -> &[Vec<(usize, i8)>] {
        &self.cells
    }
    pub fn cell_faces(&self, c: usize) -> &[(usize, i8)] {
        &self.cells[c]
    }
    /// Cells sharing face `f` with the face's sign in each cell.
    pub fn face_cells(&self, f: usize) -> &[(usize, i8)] {
        &self.face_cells[f]
    }
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }
    pub fn cell_vertices(&self, c: usize) -> &[usize] {
        &self.cell_vertices[c]
    }
    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_cells[f].len() == 1
    }
    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_on_boundary[e]
    }
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_on_boundary[v]
    }

    /// Edge vector `x_head - x_tail`.
    pub fn edge_vector(&self, e: usize) -> &Vec3 {
        &self.geom.edge_vector[e]
    }
    pub fn edge_length(&self, e: usize) -> f64 {
        self.geom.edge_length[e]
    }
    pub fn edge_tangent(&self, e: usize) -> Vec3 {
        self.geom.edge_vector[e] / self.geom.edge_length[e]
    }
    pub fn edge_midpoint(&self, e: usize) -> &Point {
        &self.geom.edge_midpoint[e]
    }
    pub fn face_center(&self, f: usize) -> &Point {
        &self.geom.face_center[f]
    }
    pub fn face_area_vector(&self, f: usize) -> &Vec3 {
        &self.geom.face_area[f]
    }
    pub fn cell_center(&self, c: usize) -> &Point {
        &self.geom.cell_center[c]
    }
    pub fn cell_volume(&self, c: usize) -> f64 {
        self.geom.cell_volume[c]
    }
    pub fn cell_volumes(&self) -> &[f64] {
        &self.geom.cell_volume
    }
    pub fn cell_diameter(&self, c: usize) -> f64 {
        self.geom.cell_diameter[c]
    }
    /// Largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        self.geom.cell_diameter.iter().cloned().fold(0.0, f64::max)
    }
    pub fn total_volume(&self) -> f64 {
        self.geom.cell_volume.iter().sum()
    }

    /// Fan triangles `(x_f, v_i, v_{i+1})` of face `f`, oriented like the face.
    pub fn face_triangles(&self, f: usize) -> impl Iterator<Item = [Point; 3]> + '_ {
        let lp = &self.faces[f];
        let xf = self.geom.face_center[f];
        (0..lp.len()).map(move |i| {
            [
                xf,
                self.vertices[lp[i]],
                self.vertices[lp[(i + 1) % lp.len()]],
            ]
        })
    }

    pub fn quality(&self) -> MeshQuality {
        let mut min_volume = f64::INFINITY;
        let mut max_aspect: f64 = 0.0;
        for c in 0..self.num_cells() {
            let vol = self.cell_volume(c);
            min_volume = min_volume.min(vol);
            max_aspect = max_aspect.max(self.cell_diameter(c) / vol.cbrt());
        }
        MeshQuality {
            min_volume,
            max_aspect,
        }
    }

    /// Evaluates the primal invariants that are geometric rather than
    /// enforced at construction.
    pub fn report(&self) -> MeshReport {
        let mut max_closure: f64 = 0.0;
        for cf in &self.cells {
            let mut sum = Vec3::zeros();
            let mut surface = 0.0;
            for &(f, s) in cf {
                sum += s as f64 * self.geom.face_area[f];
                surface += self.geom.face_area[f].norm();
            }
            max_closure = max_closure.max(sum.norm() / surface);
        }
        let quality = self.quality();
        MeshReport {
            vertices: self.num_vertices(),
            edges: self.num_edges(),
            faces: self.num_faces(),
            cells: self.num_cells(),
            euler_characteristic: self.euler_characteristic(),
            total_volume: self.total_volume(),
            min_volume: quality.min_volume,
            max_closure_residual: max_closure,
            quality,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_tet() -> PrimalMesh {
        let v = vec![Point::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        // Loops chosen so that every normal points outward.
        let faces = vec![vec![0, 2, 1], vec![0, 1, 3], vec![0, 3, 2], vec![1, 2, 3]];
        PrimalMesh::from_topology(None, v, faces, vec![vec![(0, 1), (1, 1), (2, 1), (3, 1)]])
            .unwrap()
    }

    #[test]
    fn tetrahedron_measures() {
        let m = single_tet();
        assert_eq!(m.num_edges(), 6);
        assert!((m.cell_volume(0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(m.euler_characteristic(), 1);
        assert!(m.report().max_closure_residual < 1e-15);
        // edges are lexicographic vertex pairs
        assert_eq!(m.edges()[0], [0, 1]);
        assert_eq!(m.edges()[5], [2, 3]);
    }

    #[test]
    fn inconsistent_orientation_is_rejected() {
        let v = vec![Point::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let faces = vec![vec![0, 2, 1], vec![0, 1, 3], vec![0, 3, 2], vec![1, 2, 3]];
        let err = PrimalMesh::from_topology(
            None,
            v,
            faces,
            vec![vec![(0, 1), (1, -1), (2, 1), (3, 1)]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn inverted_cell_is_degenerate() {
        let v = vec![Point::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let faces = vec![vec![0, 2, 1], vec![0, 1, 3], vec![0, 3, 2], vec![1, 2, 3]];
        let err = PrimalMesh::from_topology(
            None,
            v,
            faces,
            vec![vec![(0, -1), (1, -1), (2, -1), (3, -1)]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateMesh(_)));
    }

    #[test]
    fn dangling_vertex_index() {
        let v = vec![Point::zeros(), Vec3::x(), Vec3::y()];
        let err =
            PrimalMesh::from_topology(None, v, vec![vec![0, 1, 9]], vec![vec![(0, 1)]]).unwrap_err();
        assert!(err.to_string().contains("vertex 9 of 3"));
    }
}
