use super::assemble::{SchemeContext, SchemeOperators};
use super::system::SaddleSystem;
use super::Scheme;
use crate::error::{Error, Result};
use crate::sparse::norm_inf;

/// Per-row balance residuals `K x − b` of a solved system.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConservationReport {
    pub scheme: Scheme,
    /// One entry per mass row: dual cells (vertex-based) or primal cells (cell-based).
    pub mass: Vec<f64>,
    /// One entry per free momentum row: dual faces (vertex-based) or interior
    /// dual edges (cell-based).
    pub momentum: Vec<f64>,
    /// Primal entity of each `momentum` entry.
    pub momentum_entities: Vec<usize>,
    pub max_mass: f64,
    pub max_momentum: f64,
    /// `‖b‖∞` of the reduced system.
    pub rhs_inf: f64,
}

impl ConservationReport {
    pub fn max_residual(&self) -> f64 {
        self.max_mass.max(self.max_momentum)
    }

    /// `max residual ≤ rel·‖b‖∞`, or `≤ abs_floor` when `b = 0`.
    pub fn within(&self, rel: f64, abs_floor: f64) -> bool {
        self.max_residual() <= (rel * self.rhs_inf).max(abs_floor)
    }
}

pub fn conservation_residuals(sys: &SaddleSystem, x: &[f64]) -> Result<ConservationReport> {
    if x.len() != sys.dim() {
        return Err(Error::invalid(format!(
            "solution has {} entries, system has {}",
            x.len(),
            sys.dim()
        )));
    }
    let r: Vec<f64> = sys.full_residual(x).into_iter().map(|v| -v).collect();
    let p = sys.pressure_block();
    let u = sys.block("u").expect("velocity block");
    let mass = r[p.range()].to_vec();
    let momentum_entities: Vec<usize> = u.range().filter(|&i| !sys.is_fixed(i)).map(|i| i - u.offset).collect();
    let momentum: Vec<f64> = momentum_entities.iter().map(|&k| r[u.offset + k]).collect();
    Ok(ConservationReport {
        scheme: sys.scheme(),
        max_mass: norm_inf(&mass),
        max_momentum: norm_inf(&momentum),
        mass,
        momentum,
        momentum_entities,
        rhs_inf: norm_inf(sys.reduced_rhs()),
    })
}

/// Discrete divergence theorem on the union of the mass control volumes in
/// `subset` (vertices for vertex-based, cells for cell-based).
///
/// Returns `|Σ_{i∈S} r_i − (net flux across the boundary of the union − Σ_{i∈S} b_i + λ Σ_{i∈S} w_i)|`,
/// where the net flux only involves flux entities cut by the union boundary.
pub fn divergence_theorem_defect(
    ctx: &SchemeContext<'_>,
    ops: &SchemeOperators,
    sys: &SaddleSystem,
    x: &[f64],
    subset: &[usize],
) -> Result<f64> {
    let report = conservation_residuals(sys, x)?;
    let p = sys.pressure_block();
    let u = sys.block("u").expect("velocity block");
    if let Some(&bad) = subset.iter().find(|&&i| i >= p.len) {
        return Err(Error::invalid(format!("control volume {bad} out of range {}", p.len)));
    }
    let mut inside = vec![false; p.len];
    subset.iter().for_each(|&i| inside[i] = true);
    let vel = &x[u.range()];
    // mass operator B (rows: control volumes) and the flux it acts on
    let (b, flux) = match sys.scheme() {
        Scheme::VertexBased => (ctx.inc.grad.transpose(), ops.h_rho.apply(vel)),
        Scheme::CellBased => (ctx.inc.div.clone(), vel.iter().map(|v| -v).collect()),
    };
    let mut column_sum = vec![0i32; b.ncols()];
    for (r, c, s) in b.triplets() {
        if inside[r] {
            column_sum[c] += s;
        }
    }
    let net: f64 = column_sum
        .iter()
        .zip(&flux)
        .filter(|(s, _)| **s != 0)
        .map(|(&s, q)| s as f64 * q)
        .sum();
    let lambda = sys.block("lambda").map(|l| x[l.offset]).unwrap_or(0.0);
    let mut expected = net;
    let mut lhs = 0.0;
    for &i in subset {
        expected += lambda * sys.pressure_weights()[i] - sys.rhs()[p.offset + i];
        lhs += report.mass[i];
    }
    Ok((lhs - expected).abs())
}
