//! Structured hexahedral and tetrahedral mesh families and random
//! perturbation of interior vertices.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PrimalMesh;
use crate::error::{Error, Result};
use crate::geometry::{mean_point, Point};

/// Axis-aligned box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        BoundingBox { min, max }
    }

    pub fn unit() -> Self {
        BoundingBox::new([0.0; 3], [1.0; 3])
    }

    fn validate(&self) -> Result<()> {
        for d in 0..3 {
            let ext = self.max[d] - self.min[d];
            if !(ext > 0.0) || !ext.is_finite() {
                return Err(Error::invalid(format!("box extent along axis {d} is {ext}")));
            }
        }
        Ok(())
    }
}

fn check_counts(nx: usize, ny: usize, nz: usize) -> Result<()> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::invalid(format!(
            "subdivision counts must be positive, got ({nx}, {ny}, {nz})"
        )));
    }
    Ok(())
}

fn grid_vertices(nx: usize, ny: usize, nz: usize, bbox: &BoundingBox) -> Vec<Point> {
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    let h = [
        (bbox.max[0] - bbox.min[0]) / nx as f64,
        (bbox.max[1] - bbox.min[1]) / ny as f64,
        (bbox.max[2] - bbox.min[2]) / nz as f64,
    ];
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                // Snap the last node to the box face so boundaries are exact.
                let coord = |idx: usize, n: usize, d: usize| {
                    if idx == n {
                        bbox.max[d]
                    } else {
                        bbox.min[d] + idx as f64 * h[d]
                    }
                };
                v.push(Point::new(coord(i, nx, 0), coord(j, ny, 1), coord(k, nz, 2)));
            }
        }
    }
    v
}

/// Structured hexahedral mesh with lexicographic numbering (x fastest).
///
/// Faces are numbered by normal direction (x, then y, then z), each group
/// lexicographically, with loops oriented along the positive axis.
pub fn build_cartesian_hex(nx: usize, ny: usize, nz: usize, bbox: BoundingBox) -> Result<PrimalMesh> {
    check_counts(nx, ny, nz)?;
    bbox.validate()?;
    let vertices = grid_vertices(nx, ny, nz, &bbox);
    let vid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);

    let mut faces = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..=nx {
                faces.push(vec![vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)]);
            }
        }
    }
    for k in 0..nz {
        for j in 0..=ny {
            for i in 0..nx {
                faces.push(vec![vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j, k)]);
            }
        }
    }
    for k in 0..=nz {
        for j in 0..ny {
            for i in 0..nx {
                faces.push(vec![vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)]);
            }
        }
    }
    let off_y = (nx + 1) * ny * nz;
    let off_z = off_y + nx * (ny + 1) * nz;
    let fx = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + ny * k);
    let fy = |i: usize, j: usize, k: usize| off_y + i + nx * (j + (ny + 1) * k);
    let fz = |i: usize, j: usize, k: usize| off_z + i + nx * (j + ny * k);

    let mut cells = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                cells.push(vec![
                    (fx(i, j, k), -1),
                    (fx(i + 1, j, k), 1),
                    (fy(i, j, k), -1),
                    (fy(i, j + 1, k), 1),
                    (fz(i, j, k), -1),
                    (fz(i, j, k + 1), 1),
                ]);
            }
        }
    }
    PrimalMesh::from_topology(
        Some(format!("hex-{nx}x{ny}x{nz}")),
        vertices,
        faces,
        cells,
    )
}

/// Each hexahedron of the structured grid split into six tetrahedra sharing
/// its main diagonal (Kuhn subdivision). All face diagonals follow the same
/// rule, so neighbouring hexahedra conform.
pub fn build_tet_mesh(nx: usize, ny: usize, nz: usize, bbox: BoundingBox) -> Result<PrimalMesh> {
    check_counts(nx, ny, nz)?;
    bbox.validate()?;
    let vertices = grid_vertices(nx, ny, nz, &bbox);
    let vid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for perm in PERMS {
                    let mut p = [i, j, k];
                    let mut t = [vid(p[0], p[1], p[2]); 4];
                    for (step, &axis) in perm.iter().enumerate() {
                        p[axis] += 1;
                        t[step + 1] = vid(p[0], p[1], p[2]);
                    }
                    tets.push(t);
                }
            }
        }
    }

    let mut face_ids: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    for t in &tets {
        for skip in 0..4 {
            let mut tri = [0usize; 3];
            let mut n = 0;
            for (q, &v) in t.iter().enumerate() {
                if q != skip {
                    tri[n] = v;
                    n += 1;
                }
            }
            tri.sort_unstable();
            face_ids.insert(tri, 0);
        }
    }
    for (idx, id) in face_ids.values_mut().enumerate() {
        *id = idx;
    }
    let faces: Vec<Vec<usize>> = face_ids.keys().map(|t| t.to_vec()).collect();

    let mut cells = Vec::with_capacity(tets.len());
    for t in &tets {
        let xc = mean_point(t.iter().map(|&v| &vertices[v]));
        let mut cf = Vec::with_capacity(4);
        for skip in 0..4 {
            let mut tri: Vec<usize> = t.iter().enumerate().filter(|&(q, _)| q != skip).map(|(_, &v)| v).collect();
            tri.sort_unstable();
            let f = face_ids[&[tri[0], tri[1], tri[2]]];
            let (a, b, c) = (&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]);
            let normal = (b - a).cross(&(c - a));
            let xf = (a + b + c) / 3.0;
            cf.push((f, if normal.dot(&(xf - xc)) > 0.0 { 1 } else { -1 }));
        }
        cells.push(cf);
    }
    PrimalMesh::from_topology(
        Some(format!("tet-{nx}x{ny}x{nz}")),
        vertices,
        faces,
        cells,
    )
}

/// Moves every interior vertex by `amplitude · h_v · ξ` with `ξ` uniform in
/// `[-1, 1]³` and `h_v` the shortest incident edge. Boundary vertices stay put.
pub fn perturb_mesh(mesh: &PrimalMesh, amplitude: f64, seed: u64) -> Result<PrimalMesh> {
    if !(0.0..=0.3).contains(&amplitude) {
        return Err(Error::invalid(format!(
            "perturbation amplitude {amplitude} outside [0, 0.3]"
        )));
    }
    if amplitude == 0.0 {
        return Ok(mesh.clone());
    }
    let mut h_local = vec![f64::INFINITY; mesh.num_vertices()];
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let l = mesh.edge_length(e);
        h_local[a] = h_local[a].min(l);
        h_local[b] = h_local[b].min(l);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = mesh.vertices().to_vec();
    for (v, x) in vertices.iter_mut().enumerate() {
        let xi = [
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        ];
        if mesh.is_boundary_vertex(v) {
            continue;
        }
        for d in 0..3 {
            x[d] += amplitude * h_local[v] * xi[d];
        }
    }
    let mut out = mesh.with_vertices(vertices)?;
    out.set_name(mesh.name().map(|n| format!("{n}-perturbed-{amplitude}-{seed}")));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_hex_counts() {
        let m = build_cartesian_hex(1, 1, 1, BoundingBox::unit()).unwrap();
        assert_eq!(
            (m.num_vertices(), m.num_edges(), m.num_faces(), m.num_cells()),
            (8, 12, 6, 1)
        );
    }

    #[test]
    fn hex_222_counts_and_euler() {
        let m = build_cartesian_hex(2, 2, 2, BoundingBox::unit()).unwrap();
        assert_eq!(
            (m.num_vertices(), m.num_edges(), m.num_faces(), m.num_cells()),
            (27, 54, 36, 8)
        );
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn tet_split_volumes() {
        let m = build_tet_mesh(1, 1, 1, BoundingBox::unit()).unwrap();
        assert_eq!(m.num_cells(), 6);
        for c in 0..6 {
            assert!((m.cell_volume(c) - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((m.total_volume() - 1.0).abs() < 1e-12);
        assert_eq!(build_tet_mesh(2, 2, 2, BoundingBox::unit()).unwrap().num_cells(), 48);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(matches!(
            build_cartesian_hex(0, 1, 1, BoundingBox::unit()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            build_tet_mesh(1, 1, 1, BoundingBox::new([0.0; 3], [1.0, 0.0, 1.0])),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn perturbation_identity_and_determinism() {
        let m = build_cartesian_hex(2, 2, 2, BoundingBox::unit()).unwrap();
        assert_eq!(perturb_mesh(&m, 0.0, 7).unwrap(), m);
        let a = perturb_mesh(&m, 0.2, 42).unwrap();
        let b = perturb_mesh(&m, 0.2, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.vertices(), m.vertices());
        for v in 0..m.num_vertices() {
            if m.is_boundary_vertex(v) {
                assert_eq!(a.vertex(v), m.vertex(v));
            }
        }
        // closed-surface identity per cell
        assert!(a.report().max_closure_residual < 1e-12);
        assert!(matches!(perturb_mesh(&m, 0.5, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn quality_unchanged_without_perturbation() {
        let m = build_cartesian_hex(3, 2, 2, BoundingBox::unit()).unwrap();
        assert_eq!(perturb_mesh(&m, 0.0, 3).unwrap().quality(), m.quality());
    }
}
