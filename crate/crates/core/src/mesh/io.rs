//! Mesh JSON format.
//!
//! ```json
//! { "name": "optional",
//!   "vertices": [[x, y, z], ...],
//!   "faces": [[v0, v1, v2, ...], ...],
//!   "cells": [[±(f+1), ...], ...] }
//! ```
//!
//! Cell entries are 1-based face indices, negative when the face normal
//! points into the cell. Coordinates are written with 17 significant digits
//! so a save/load round trip is exact.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::PrimalMesh;
use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    #[serde(default)]
    name: Option<String>,
    vertices: Vec<[f64; 3]>,
    faces: Vec<Vec<usize>>,
    cells: Vec<Vec<i64>>,
}

pub fn mesh_to_json_string(mesh: &PrimalMesh) -> String {
    let mut s = String::from("{\n");
    if let Some(name) = mesh.name() {
        let _ = writeln!(s, "  \"name\": {},", serde_json::Value::String(name.to_owned()));
    }
    s.push_str("  \"vertices\": [\n");
    let nv = mesh.num_vertices();
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = write!(s, "    [{:.16e}, {:.16e}, {:.16e}]", p.x, p.y, p.z);
        s.push_str(if i + 1 < nv { ",\n" } else { "\n" });
    }
    s.push_str("  ],\n  \"faces\": [\n");
    let nf = mesh.num_faces();
    for (i, lp) in mesh.faces().iter().enumerate() {
        let items: Vec<String> = lp.iter().map(|v| v.to_string()).collect();
        let _ = write!(s, "    [{}]", items.join(", "));
        s.push_str(if i + 1 < nf { ",\n" } else { "\n" });
    }
    s.push_str("  ],\n  \"cells\": [\n");
    let nc = mesh.num_cells();
    for (i, cf) in mesh.cells().iter().enumerate() {
        let items: Vec<String> = cf
            .iter()
            .map(|&(f, sgn)| (sgn as i64 * (f as i64 + 1)).to_string())
            .collect();
        let _ = write!(s, "    [{}]", items.join(", "));
        s.push_str(if i + 1 < nc { ",\n" } else { "\n" });
    }
    s.push_str("  ]\n}\n");
    s
}

pub fn mesh_from_json_str(text: &str, origin: &Path) -> Result<PrimalMesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let nf = file.faces.len();
    let mut cells = Vec::with_capacity(file.cells.len());
    for (c, entries) in file.cells.iter().enumerate() {
        let mut cf = Vec::with_capacity(entries.len());
        for &entry in entries {
            if entry == 0 || entry.unsigned_abs() as usize > nf {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} references face entry {entry} with {nf} faces"
                )));
            }
            cf.push((entry.unsigned_abs() as usize - 1, if entry > 0 { 1 } else { -1 }));
        }
        cells.push(cf);
    }
    let vertices = file.vertices.iter().map(|v| Point::new(v[0], v[1], v[2])).collect();
    PrimalMesh::from_topology(file.name, vertices, file.faces, cells)
}

pub fn save_mesh_json(mesh: &PrimalMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mesh_to_json_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn load_mesh_json(path: impl AsRef<Path>) -> Result<PrimalMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    mesh_from_json_str(&text, path)
}
