//! Legacy ASCII VTK export.
//!
//! The primal mesh goes to `path` as an unstructured grid of polyhedra.
//! Vertex and dual-cell fields are point data, cell and dual-vertex fields
//! are cell data. Edge-like fields (primal edges, dual faces) are written to
//! `<stem>_edges.vtk` on a polyline grid and face-like fields (primal faces,
//! dual edges) to `<stem>_faces.vtk` on a polygon grid.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{EntityKind, PrimalMesh};
use crate::cochain::{Cochain, Side};
use crate::error::{Error, Result};

pub struct NamedField<'a> {
    pub name: &'a str,
    pub cochain: &'a Cochain,
}

impl<'a> NamedField<'a> {
    pub fn new(name: &'a str, cochain: &'a Cochain) -> Self {
        NamedField { name, cochain }
    }
}

/// Primal entity carrying a cochain's values in the export.
fn carrier(c: &Cochain) -> EntityKind {
    match (c.side(), c.kind()) {
        (Side::Primal, k) => k,
        (Side::Dual, EntityKind::Vertex) => EntityKind::Cell,
        (Side::Dual, EntityKind::Edge) => EntityKind::Face,
        (Side::Dual, EntityKind::Face) => EntityKind::Edge,
        (Side::Dual, EntityKind::Cell) => EntityKind::Vertex,
    }
}

fn header(out: &mut String, title: &str, mesh: &PrimalMesh) {
    out.push_str("# vtk DataFile Version 2.0\n");
    let _ = writeln!(out, "{title}");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
}

fn data_section(out: &mut String, label: &str, count: usize, fields: &[&NamedField<'_>]) {
    if fields.is_empty() {
        return;
    }
    let _ = writeln!(out, "{label} {count}");
    for f in fields {
        let name: String = f.name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in f.cochain.values() {
            let _ = writeln!(out, "{v:.16e}");
        }
    }
}

fn write(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    path.with_file_name(format!("{stem}_{suffix}.vtk"))
}

pub fn export_vtk(mesh: &PrimalMesh, fields: &[NamedField<'_>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    for f in fields {
        let expected = mesh.count(carrier(f.cochain));
        if f.cochain.len() != expected {
            return Err(Error::invalid(format!(
                "field '{}' has {} values, expected {expected}",
                f.name,
                f.cochain.len()
            )));
        }
    }
    let pick = |k: EntityKind| -> Vec<&NamedField<'_>> {
        fields.iter().filter(|f| carrier(f.cochain) == k).collect()
    };
    let title = mesh.name().unwrap_or("cdo mesh");

    let mut out = String::new();
    header(&mut out, title, mesh);
    let nc = mesh.num_cells();
    let streams: Vec<Vec<usize>> = (0..nc)
        .map(|c| {
            let cf = mesh.cell_faces(c);
            let mut s = vec![cf.len()];
            for &(f, _) in cf {
                let lp = &mesh.faces()[f];
                s.push(lp.len());
                s.extend_from_slice(lp);
            }
            s
        })
        .collect();
    let size: usize = streams.iter().map(|s| s.len() + 1).sum();
    let _ = writeln!(out, "CELLS {nc} {size}");
    for s in &streams {
        let items: Vec<String> = s.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{} {}", s.len(), items.join(" "));
    }
    let _ = writeln!(out, "CELL_TYPES {nc}");
    for _ in 0..nc {
        out.push_str("42\n");
    }
    data_section(&mut out, "CELL_DATA", nc, &pick(EntityKind::Cell));
    data_section(&mut out, "POINT_DATA", mesh.num_vertices(), &pick(EntityKind::Vertex));
    write(path, out)?;

    let edge_fields = pick(EntityKind::Edge);
    if !edge_fields.is_empty() {
        let mut out = String::new();
        header(&mut out, title, mesh);
        let ne = mesh.num_edges();
        let _ = writeln!(out, "CELLS {ne} {}", 3 * ne);
        for [a, b] in mesh.edges() {
            let _ = writeln!(out, "2 {a} {b}");
        }
        let _ = writeln!(out, "CELL_TYPES {ne}");
        for _ in 0..ne {
            out.push_str("3\n");
        }
        data_section(&mut out, "CELL_DATA", ne, &edge_fields);
        write(&sibling(path, "edges"), out)?;
    }

    let face_fields = pick(EntityKind::Face);
    if !face_fields.is_empty() {
        let mut out = String::new();
        header(&mut out, title, mesh);
        let nf = mesh.num_faces();
        let size: usize = mesh.faces().iter().map(|lp| lp.len() + 1).sum();
        let _ = writeln!(out, "CELLS {nf} {size}");
        for lp in mesh.faces() {
            let items: Vec<String> = lp.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{} {}", lp.len(), items.join(" "));
        }
        let _ = writeln!(out, "CELL_TYPES {nf}");
        for _ in 0..nf {
            out.push_str("7\n");
        }
        data_section(&mut out, "CELL_DATA", nf, &face_fields);
        write(&sibling(path, "faces"), out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian_hex, BoundingBox};

    #[test]
    fn writes_header_point_and_cell_data() {
        let dir = tempfile::tempdir().unwrap();
        let m = build_cartesian_hex(2, 2, 2, BoundingBox::unit()).unwrap();
        let path = dir.path().join("m.vtk");
        export_vtk(&m, &[], &path).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("# vtk DataFile Version"));

        let ones = Cochain::new(Side::Primal, EntityKind::Vertex, vec![1.0; 27]);
        let p = Cochain::new(Side::Primal, EntityKind::Cell, (0..8).map(|c| c as f64).collect());
        let flux = Cochain::new(Side::Primal, EntityKind::Face, vec![0.5; 36]);
        export_vtk(
            &m,
            &[NamedField::new("one", &ones), NamedField::new("pressure", &p), NamedField::new("flux", &flux)],
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("CELL_DATA 8"));
        let point_data = text.split("POINT_DATA 27").nth(1).unwrap();
        let values: Vec<f64> = point_data
            .lines()
            .skip(3)
            .filter_map(|l| l.trim().parse().ok())
            .collect();
        assert_eq!(values.len(), 27);
        assert!(values.iter().all(|&v| v == 1.0));
        assert!(dir.path().join("m_faces.vtk").exists());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let m = build_cartesian_hex(1, 1, 1, BoundingBox::unit()).unwrap();
        let bad = Cochain::new(Side::Primal, EntityKind::Vertex, vec![1.0; 3]);
        assert!(matches!(
            export_vtk(&m, &[NamedField::new("bad", &bad)], dir.path().join("x.vtk")),
            Err(Error::InvalidArgument(_))
        ));
    }
}
