use super::{SolveResult, SolverKind};
use crate::error::{Error, Result};
use crate::sparse::{diagonal, dot, matvec, norm2, symmetry_defect};
use crate::stokes::SaddleSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    None,
    /// Diagonal of the leading block and Schur-diagonal approximations for
    /// the blocks with a zero diagonal.
    BlockDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinresOptions {
    pub tol: f64,
    pub maxit: usize,
    pub precond: Preconditioner,
}

impl Default for MinresOptions {
    fn default() -> Self {
        MinresOptions {
            tol: 1e-10,
            maxit: 20_000,
            precond: Preconditioner::BlockDiagonal,
        }
    }
}

/// Inverse diagonal of the block preconditioner.
///
/// Blocks are visited in layout order. Unknowns with a non-zero diagonal use
/// `|K_ii|`; the others use `Σ_j K_ij² / d_j` over already scaled unknowns `j`
/// of earlier blocks, which is the diagonal of the Schur complement
/// `B D⁻¹ Bᵀ`.
fn block_diagonal_inverse(sys: &SaddleSystem) -> Vec<f64> {
    let a = sys.reduced_matrix();
    let ids = sys.free_block_ids();
    let diag = diagonal(a);
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut done = vec![false; n];
    let nblocks = sys.blocks().len();
    for blk in 0..nblocks {
        let members: Vec<usize> = (0..n).filter(|&i| ids[i] == blk).collect();
        let zero_block = members.iter().all(|&i| diag[i] == 0.0);
        for &i in &members {
            d[i] = if !zero_block && diag[i] != 0.0 {
                diag[i].abs()
            } else {
                let row = a.outer_view(i).expect("row in range");
                row.iter()
                    .filter(|(j, _)| done[*j] && d[*j] > 0.0)
                    .map(|(j, &v)| v * v / d[j])
                    .sum()
            };
        }
        for &i in &members {
            done[i] = true;
        }
    }
    d.into_iter().map(|x| if x > 0.0 { 1.0 / x } else { 1.0 }).collect()
}

/// Preconditioned MINRES on the reduced system starting from zero.
///
/// The returned residual is recomputed from the original system. A run that
/// exhausts `maxit` returns `converged = false`.
pub fn solve_minres(sys: &SaddleSystem, opts: &MinresOptions) -> Result<SolveResult> {
    let a = sys.reduced_matrix();
    let defect = symmetry_defect(a);
    if defect > 1e-12 {
        return Err(Error::invalid(format!(
            "MINRES needs a symmetric matrix (relative asymmetry {defect:.2e})"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("MINRES tolerance must be positive"));
    }
    let b = sys.reduced_rhs();
    let n = b.len();
    let minv = match opts.precond {
        Preconditioner::None => vec![1.0; n],
        Preconditioner::BlockDiagonal => block_diagonal_inverse(sys),
    };
    let precond = |r: &[f64]| -> Vec<f64> { r.iter().zip(&minv).map(|(x, m)| x * m).collect() };
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    let finish = |x: Vec<f64>, iterations: usize, converged: bool| {
        let full = sys.expand(&x);
        let relative_residual = sys.relative_residual(&full);
        SolveResult {
            method: SolverKind::Minres,
            solution: full,
            relative_residual,
            iterations: Some(iterations),
            converged,
            factorization: None,
        }
    };
    if bnorm == 0.0 {
        return Ok(finish(x, 0, true));
    }
    let true_rel = |x: &[f64]| -> f64 {
        let ax = matvec(a, x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        norm2(&r) / bnorm
    };

    let mut r1 = b.to_vec();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y);
    if !(beta1 > 0.0) {
        return Err(Error::NumericalFailure("preconditioner is not positive definite".into()));
    }
    let beta1 = beta1.sqrt();
    let mut r2 = r1.clone();
    let (mut oldb, mut beta, mut dbar, mut epsln) = (0.0, beta1, 0.0, 0.0);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    for itn in 1..=opts.maxit {
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|yi| s * yi).collect();
        y = matvec(a, &v);
        if itn >= 2 {
            let c = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(yi, ri)| *yi -= c * ri);
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(yi, ri)| *yi -= c * ri);
        r1 = std::mem::replace(&mut r2, y);
        y = precond(&r2);
        oldb = beta;
        let b2 = dot(&r2, &y);
        if b2 < 0.0 {
            return Err(Error::NumericalFailure("preconditioner is not positive definite".into()));
        }
        beta = b2.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vi, w1i), w2i)| (vi - oldeps * w1i - delta * w2i) / gamma)
            .collect();
        x.iter_mut().zip(&w).for_each(|(xi, wi)| *xi += phi * wi);
        if phibar / beta1 <= opts.tol || beta == 0.0 {
            if true_rel(&x) <= opts.tol {
                return Ok(finish(x, itn, true));
            }
            if beta == 0.0 {
                return Ok(finish(x, itn, false));
            }
        }
    }
    let converged = true_rel(&x) <= opts.tol;
    Ok(finish(x, opts.maxit, converged))
}
