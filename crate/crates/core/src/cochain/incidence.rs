use sprs::{CsMat, TriMat};

use crate::mesh::{EntityKind, PrimalMesh};

/// Integer incidence matrix with entries in `{-1, 0, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedIncidence {
    rows: EntityKind,
    cols: EntityKind,
    matrix: CsMat<i32>,
}

impl SignedIncidence {
    fn from_triplets(rows: EntityKind, cols: EntityKind, shape: (usize, usize), t: &[(usize, usize, i32)]) -> Self {
        let mut tri = TriMat::new(shape);
        for &(r, c, v) in t {
            tri.add_triplet(r, c, v);
        }
        SignedIncidence {
            rows,
            cols,
            matrix: tri.to_csr(),
        }
    }

    pub fn row_kind(&self) -> EntityKind {
        self.rows
    }
    pub fn col_kind(&self) -> EntityKind {
        self.cols
    }
    pub fn nrows(&self) -> usize {
        self.matrix.rows()
    }
    pub fn ncols(&self) -> usize {
        self.matrix.cols()
    }
    pub fn matrix(&self) -> &CsMat<i32> {
        &self.matrix
    }

    /// The transposed operator (the dual-mesh partner in the adjunction).
    pub fn transpose(&self) -> SignedIncidence {
        SignedIncidence {
            rows: self.cols,
            cols: self.rows,
            matrix: self.matrix.transpose_view().to_csr(),
        }
    }

    pub fn to_f64(&self) -> CsMat<f64> {
        self.matrix.map(|&v| v as f64)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols());
        self.matrix
            .outer_iterator()
            .map(|row| row.iter().map(|(j, &s)| s as f64 * x[j]).sum())
            .collect()
    }

    /// Sorted `(row, col, sign)` triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, i32)> {
        let mut t: Vec<_> = self.matrix.iter().map(|(&v, (r, c))| (r, c, v)).collect();
        t.sort_unstable();
        t
    }

    /// Exact integer product `self · rhs`.
    pub fn compose(&self, rhs: &SignedIncidence) -> CsMat<i32> {
        &self.matrix * &rhs.matrix
    }
}

/// Discrete gradient, curl and divergence of a primal mesh.
#[derive(Debug, Clone)]
pub struct Incidence {
    /// Edges × vertices.
    pub grad: SignedIncidence,
    /// Faces × edges.
    pub curl: SignedIncidence,
    /// Cells × faces.
    pub div: SignedIncidence,
}

impl Incidence {
    /// Dual divergence (dual cells × dual faces) = `Gᵀ`.
    pub fn dual_div(&self) -> SignedIncidence {
        self.grad.transpose()
    }
    /// Dual curl (dual faces × dual edges) = `Cᵀ`.
    pub fn dual_curl(&self) -> SignedIncidence {
        self.curl.transpose()
    }
    /// Dual gradient (dual edges × dual vertices) = `Dᵀ`.
    pub fn dual_grad(&self) -> SignedIncidence {
        self.div.transpose()
    }
}

pub fn build_incidence(mesh: &PrimalMesh) -> Incidence {
    let g: Vec<_> = mesh
        .edges()
        .iter()
        .enumerate()
        .flat_map(|(e, &[a, b])| [(e, a, -1), (e, b, 1)])
        .collect();
    let c: Vec<_> = (0..mesh.num_faces())
        .flat_map(|f| mesh.face_edges(f).iter().map(move |&(e, o)| (f, e, o as i32)))
        .collect();
    let d: Vec<_> = (0..mesh.num_cells())
        .flat_map(|c| mesh.cell_faces(c).iter().map(move |&(f, s)| (c, f, s as i32)))
        .collect();
    use EntityKind::*;
    Incidence {
        grad: SignedIncidence::from_triplets(Edge, Vertex, (mesh.num_edges(), mesh.num_vertices()), &g),
        curl: SignedIncidence::from_triplets(Face, Edge, (mesh.num_faces(), mesh.num_edges()), &c),
        div: SignedIncidence::from_triplets(Cell, Face, (mesh.num_cells(), mesh.num_faces()), &d),
    }
}
