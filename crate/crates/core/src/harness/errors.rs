use super::cases::ManufacturedCase;
use crate::cochain::{reduce, Field, Side};
use crate::error::{Error, Result};
use crate::hodge::HodgeOperator;
use crate::mesh::EntityKind;
use crate::stokes::{SaddleSystem, Scheme, SchemeContext, SchemeOperators};

/// References below this are treated as zero and the error is reported in
/// absolute form.
pub const ZERO_REFERENCE: f64 = 1e-12;

/// Discrete errors of one solve. Each value is relative to the norm of the
/// exact reduction unless that norm is below [`ZERO_REFERENCE`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ErrorRecord {
    pub e_u: f64,
    pub e_p: f64,
    pub e_w: f64,
    /// Norms of the exact reductions (velocity, pressure, vorticity).
    pub reference: [f64; 3],
}

impl ErrorRecord {
    pub fn is_relative(&self, field: usize) -> bool {
        self.reference[field] > ZERO_REFERENCE
    }
}

/// `sqrt(vᵀ H v)`.
pub fn energy_norm(h: &HodgeOperator, v: &[f64]) -> f64 {
    h.energy(v).max(0.0).sqrt()
}

fn ratio(err: f64, reference: f64) -> f64 {
    if reference > ZERO_REFERENCE {
        err / reference
    } else {
        err
    }
}

fn weighted_mean(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>()
}

/// Volume-weighted norm of `p_h − p` after removing the weighted mean of each,
/// plus the norm of the aligned exact values.
pub fn pressure_error(p_h: &[f64], p: &[f64], weights: &[f64]) -> (f64, f64) {
    let (mh, me) = (weighted_mean(p_h, weights), weighted_mean(p, weights));
    let mut err = 0.0;
    let mut refn = 0.0;
    for ((a, b), w) in p_h.iter().zip(p).zip(weights) {
        err += w * ((a - mh) - (b - me)).powi(2);
        refn += w * (b - me).powi(2);
    }
    (err.sqrt(), refn.sqrt())
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Compares a solution with the reductions of the exact fields.
///
/// Vertex-based: velocity on edges in the `H_ρ` norm, vorticity as `C u_h`
/// against face fluxes of ω in the `H_ν` norm, pressure at vertices weighted by
/// dual-cell volumes. Cell-based: velocity fluxes in `H_ρ`, vorticity
/// circulations in `H_ν`, pressure at cell centers weighted by cell volumes.
pub fn error_norms(
    ctx: &SchemeContext<'_>,
    ops: &SchemeOperators,
    sys: &SaddleSystem,
    solution: &[f64],
    case: &ManufacturedCase,
) -> Result<ErrorRecord> {
    if solution.len() != sys.dim() || sys.scheme() != ops.scheme {
        return Err(Error::invalid("solution does not match the system"));
    }
    let (mesh, dual) = (ctx.mesh, ctx.dual);
    let block = |name| sys.slice(solution, name).expect("block present");
    let vel = Field::Vector(&*case.velocity);
    let vort = Field::Vector(&*case.vorticity);
    let pres = Field::Scalar(&*case.pressure);
    let (u_ex, w_ex, p_ex, w_h) = match sys.scheme() {
        Scheme::VertexBased => {
            let w_h = ctx.inc.curl.apply(block("u"));
            (
                reduce(mesh, dual, vel, Side::Primal, EntityKind::Edge)?,
                reduce(mesh, dual, vort, Side::Primal, EntityKind::Face)?,
                reduce(mesh, dual, pres, Side::Primal, EntityKind::Vertex)?,
                w_h,
            )
        }
        Scheme::CellBased => (
            reduce(mesh, dual, vel, Side::Primal, EntityKind::Face)?,
            reduce(mesh, dual, vort, Side::Primal, EntityKind::Edge)?,
            reduce(mesh, dual, pres, Side::Dual, EntityKind::Vertex)?,
            block("omega").to_vec(),
        ),
    };
    let ru = energy_norm(&ops.h_rho, u_ex.values());
    let rw = energy_norm(&ops.h_nu, w_ex.values());
    let eu = energy_norm(&ops.h_rho, &difference(block("u"), u_ex.values()));
    let ew = energy_norm(&ops.h_nu, &difference(&w_h, w_ex.values()));
    let (ep, rp) = pressure_error(block("p"), p_ex.values(), sys.pressure_weights());
    Ok(ErrorRecord {
        e_u: ratio(eu, ru),
        e_p: ratio(ep, rp),
        e_w: ratio(ew, rw),
        reference: [ru, rp, rw],
    })
}
