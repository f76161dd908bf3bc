use nalgebra::DMatrix;

use super::incidence::{Incidence, SignedIncidence};
use super::{reduce, Field, Side};
use crate::error::{Error, Result};
use crate::geometry::{Point, Vec3};
use crate::mesh::{DualMesh, EntityKind, PrimalMesh};

/// Dense rank checks are only run when every operator has at most this many columns.
pub const DENSE_RANK_LIMIT: usize = 400;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ComplexReport {
    /// Largest `|(C·G)_ij|`, computed in integer arithmetic.
    pub max_cg: i64,
    /// Largest `|(D·C)_ij|`.
    pub max_dc: i64,
    pub ranks: Option<RankReport>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RankReport {
    pub rank_g: usize,
    pub rank_c: usize,
    pub rank_d: usize,
    /// `dim ker C == rank G`.
    pub exact_at_edges: bool,
    /// `dim ker D == rank C`.
    pub exact_at_faces: bool,
}

impl ComplexReport {
    pub fn is_complex(&self) -> bool {
        self.max_cg == 0 && self.max_dc == 0
    }
}

fn max_abs_entry(m: &sprs::CsMat<i32>) -> i64 {
    m.iter().map(|(&v, _)| (v as i64).abs()).max().unwrap_or(0)
}

pub fn dense_rank(op: &SignedIncidence) -> usize {
    let mut d = DMatrix::<f64>::zeros(op.nrows(), op.ncols());
    for (r, c, v) in op.triplets() {
        d[(r, c)] = v as f64;
    }
    let tol = 1e-9 * (op.nrows().max(op.ncols()) as f64);
    d.svd(false, false).rank(tol)
}

pub fn verify_complex(inc: &Incidence) -> ComplexReport {
    let max_cg = max_abs_entry(&inc.curl.compose(&inc.grad));
    let max_dc = max_abs_entry(&inc.div.compose(&inc.curl));
    let small = [&inc.grad, &inc.curl, &inc.div]
        .iter()
        .all(|m| m.ncols() <= DENSE_RANK_LIMIT && m.nrows() <= DENSE_RANK_LIMIT);
    let ranks = small.then(|| {
        let rank_g = dense_rank(&inc.grad);
        let rank_c = dense_rank(&inc.curl);
        let rank_d = dense_rank(&inc.div);
        RankReport {
            rank_g,
            rank_c,
            rank_d,
            exact_at_edges: inc.curl.ncols() - rank_c == rank_g,
            exact_at_faces: inc.div.ncols() - rank_d == rank_c,
        }
    });
    ComplexReport {
        max_cg,
        max_dc,
        ranks,
    }
}

/// One square of the primal de Rham diagram, with the field and its derivative.
#[derive(Clone, Copy)]
pub enum CommutingSquare<'a> {
    Gradient {
        potential: &'a dyn Fn(&Point) -> f64,
        gradient: Option<&'a dyn Fn(&Point) -> Vec3>,
    },
    Curl {
        field: &'a dyn Fn(&Point) -> Vec3,
        curl: Option<&'a dyn Fn(&Point) -> Vec3>,
    },
    Divergence {
        field: &'a dyn Fn(&Point) -> Vec3,
        divergence: Option<&'a dyn Fn(&Point) -> f64>,
    },
}

impl CommutingSquare<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            CommutingSquare::Gradient { .. } => "gradient",
            CommutingSquare::Curl { .. } => "curl",
            CommutingSquare::Divergence { .. } => "divergence",
        }
    }
}

fn missing(what: &str) -> Error {
    Error::invalid(format!("commuting check needs a closed-form {what} evaluator"))
}

/// `max |d·R(field) − R(d field)|` for the requested square.
pub fn commuting_check(
    mesh: &PrimalMesh,
    dual: &DualMesh,
    inc: &Incidence,
    square: CommutingSquare<'_>,
) -> Result<f64> {
    let (op, lhs, rhs) = match square {
        CommutingSquare::Gradient { potential, gradient } => {
            let grad = gradient.ok_or_else(|| missing("gradient"))?;
            (
                &inc.grad,
                reduce(mesh, dual, Field::Scalar(potential), Side::Primal, EntityKind::Vertex)?,
                reduce(mesh, dual, Field::Vector(grad), Side::Primal, EntityKind::Edge)?,
            )
        }
        CommutingSquare::Curl { field, curl } => {
            let curl = curl.ok_or_else(|| missing("curl"))?;
            (
                &inc.curl,
                reduce(mesh, dual, Field::Vector(field), Side::Primal, EntityKind::Edge)?,
                reduce(mesh, dual, Field::Vector(curl), Side::Primal, EntityKind::Face)?,
            )
        }
        CommutingSquare::Divergence { field, divergence } => {
            let div = divergence.ok_or_else(|| missing("divergence"))?;
            (
                &inc.div,
                reduce(mesh, dual, Field::Vector(field), Side::Primal, EntityKind::Face)?,
                reduce(mesh, dual, Field::Scalar(div), Side::Primal, EntityKind::Cell)?,
            )
        }
    };
    let image = op.apply(lhs.values());
    Ok(image
        .iter()
        .zip(rhs.values())
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}
