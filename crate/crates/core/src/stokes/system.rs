use sprs::CsMat;

use super::Scheme;
use crate::error::Result;
use crate::mesh::EntityKind;
use crate::sparse::{matvec, norm2, write_matrix_market, TripletBuilder};

/// A contiguous range of unknowns of one field.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct BlockInfo {
    pub name: &'static str,
    /// Primal entity carrying the unknowns (`None` for the multiplier).
    pub entity: Option<EntityKind>,
    pub offset: usize,
    pub len: usize,
}

impl BlockInfo {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Assembled symmetric saddle-point system.
///
/// The full matrix keeps every row, including those of essential DoFs; the
/// reduced system drops those rows and columns and lifts their values to the
/// right-hand side.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    scheme: Scheme,
    matrix: CsMat<f64>,
    rhs: Vec<f64>,
    fixed: Vec<Option<f64>>,
    blocks: Vec<BlockInfo>,
    constraint: bool,
    pressure_weights: Vec<f64>,
    free: Vec<usize>,
    reduced_matrix: CsMat<f64>,
    reduced_rhs: Vec<f64>,
}

impl SaddleSystem {
    pub(crate) fn new(
        scheme: Scheme,
        matrix: CsMat<f64>,
        rhs: Vec<f64>,
        fixed: Vec<Option<f64>>,
        blocks: Vec<BlockInfo>,
        constraint: bool,
        pressure_weights: Vec<f64>,
    ) -> Self {
        let n = matrix.rows();
        debug_assert_eq!(rhs.len(), n);
        debug_assert_eq!(fixed.len(), n);
        let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
        let mut position = vec![usize::MAX; n];
        for (k, &i) in free.iter().enumerate() {
            position[i] = k;
        }
        let mut reduced_rhs: Vec<f64> = free.iter().map(|&i| rhs[i]).collect();
        let mut b = TripletBuilder::new(free.len(), free.len());
        for (row, vec) in matrix.outer_iterator().enumerate() {
            let r = position[row];
            if r == usize::MAX {
                continue;
            }
            for (col, &v) in vec.iter() {
                match fixed[col] {
                    Some(g) => reduced_rhs[r] -= v * g,
                    None => b.add(r, position[col], v),
                }
            }
        }
        SaddleSystem {
            scheme,
            matrix,
            rhs,
            fixed,
            blocks,
            constraint,
            pressure_weights,
            free,
            reduced_matrix: b.build(),
            reduced_rhs,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
    /// Size of the full system, multiplier included.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
    /// Number of field unknowns (multiplier excluded).
    pub fn num_unknowns(&self) -> usize {
        self.dim() - usize::from(self.constraint)
    }
    pub fn num_free(&self) -> usize {
        self.free.len()
    }
    pub fn has_constraint(&self) -> bool {
        self.constraint
    }
    pub fn matrix(&self) -> &CsMat<f64> {
        &self.matrix
    }
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }
    pub fn fixed(&self) -> &[Option<f64>] {
        &self.fixed
    }
    pub fn is_fixed(&self, i: usize) -> bool {
        self.fixed[i].is_some()
    }
    pub fn blocks(&self) -> &[BlockInfo] {
        &self.blocks
    }
    pub fn block(&self, name: &str) -> Option<&BlockInfo> {
        self.blocks.iter().find(|b| b.name == name)
    }
    /// Weights of the zero-mean pressure constraint.
    pub fn pressure_weights(&self) -> &[f64] {
        &self.pressure_weights
    }
    pub fn pressure_block(&self) -> &BlockInfo {
        self.block("p").expect("every scheme has a pressure block")
    }
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }
    pub fn reduced_matrix(&self) -> &CsMat<f64> {
        &self.reduced_matrix
    }
    pub fn reduced_rhs(&self) -> &[f64] {
        &self.reduced_rhs
    }

    /// Full vector from free values plus the essential data.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        assert_eq!(reduced.len(), self.free.len());
        let mut x: Vec<f64> = self.fixed.iter().map(|g| g.unwrap_or(0.0)).collect();
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = reduced[k];
        }
        x
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// `b − K x` on every row of the full system.
    pub fn full_residual(&self, x: &[f64]) -> Vec<f64> {
        matvec(&self.matrix, x)
            .iter()
            .zip(&self.rhs)
            .map(|(kx, b)| b - kx)
            .collect()
    }

    /// `‖b − Kx‖ / ‖b‖` over the free rows (the absolute norm when `b = 0`).
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let r = self.full_residual(x);
        let rf: Vec<f64> = self.free.iter().map(|&i| r[i]).collect();
        let bn = norm2(&self.reduced_rhs);
        let rn = norm2(&rf);
        if bn > 0.0 {
            rn / bn
        } else {
            rn
        }
    }

    /// Block of a full vector by name.
    pub fn slice<'a>(&self, x: &'a [f64], name: &str) -> Option<&'a [f64]> {
        self.block(name).map(|b| &x[b.range()])
    }

    /// Block index of each free unknown, in block order.
    pub fn free_block_ids(&self) -> Vec<usize> {
        self.free
            .iter()
            .map(|&i| {
                self.blocks
                    .iter()
                    .position(|b| b.range().contains(&i))
                    .expect("blocks cover the system")
            })
            .collect()
    }

    pub fn write_matrix_market(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        write_matrix_market(&self.matrix, path)
    }
}
