use super::{SolveResult, SolverKind};
use crate::error::{Error, Result};
use crate::sparse::{matvec, max_abs_entry, norm2, norm_inf, SparseLu};
use crate::stokes::SaddleSystem;

pub const DEFAULT_DIRECT_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectOptions {
    /// Largest number of free unknowns accepted.
    pub cap: usize,
    /// Required relative residual.
    pub tol: f64,
    pub refinement_steps: usize,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions {
            cap: DEFAULT_DIRECT_CAP,
            tol: 1e-10,
            refinement_steps: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FactorStats {
    pub dim: usize,
    pub nnz: usize,
    pub refinement_steps: usize,
}

/// Relative size of `K z` for the constant pressure mode `z`.
fn constant_pressure_defect(sys: &SaddleSystem) -> f64 {
    let p = sys.pressure_block();
    let z: Vec<f64> = sys
        .free_dofs()
        .iter()
        .map(|&i| if p.range().contains(&i) { 1.0 } else { 0.0 })
        .collect();
    let kz = matvec(sys.reduced_matrix(), &z);
    norm_inf(&kz) / max_abs_entry(sys.reduced_matrix()).max(f64::MIN_POSITIVE)
}

/// Sparse LU with partial pivoting on the reduced system, followed by
/// iterative refinement.
pub fn solve_direct(sys: &SaddleSystem, opts: &DirectOptions) -> Result<SolveResult> {
    let n = sys.num_free();
    if n > opts.cap {
        return Err(Error::invalid(format!(
            "system has {n} unknowns, above the direct-solver cap of {}",
            opts.cap
        )));
    }
    if !sys.has_constraint() && constant_pressure_defect(sys) <= 1e-12 {
        return Err(Error::SingularSystem {
            message: format!(
                "the {} system without the zero-mean constraint has a non-trivial kernel",
                sys.scheme()
            ),
            hint: format!(
                "constant pressure mode (p = 1 on all {} pressure unknowns, zero elsewhere)",
                sys.pressure_block().len
            ),
        });
    }
    let a = sys.reduced_matrix();
    let b = sys.reduced_rhs();
    let bn = norm2(b);
    if bn == 0.0 {
        return Ok(SolveResult {
            method: SolverKind::Direct,
            solution: sys.expand(&vec![0.0; n]),
            relative_residual: 0.0,
            iterations: None,
            converged: true,
            factorization: None,
        });
    }
    let lu = SparseLu::factor(a)?;
    let mut x = lu.solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem {
            message: "LU factorization hit a zero pivot".into(),
            hint: "kernel not identified; check boundary data and the constraint row".into(),
        });
    }
    let residual = |x: &[f64]| -> Vec<f64> { matvec(a, x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };
    let mut r = residual(&x);
    let mut rel = norm2(&r) / bn;
    let mut steps = 0;
    while steps < opts.refinement_steps && rel > 1e-15 {
        let dx = lu.solve(&r);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
        let rt = residual(&trial);
        let rel_t = norm2(&rt) / bn;
        steps += 1;
        if !(rel_t < rel) {
            break;
        }
        x = trial;
        r = rt;
        rel = rel_t;
    }
    let full = sys.expand(&x);
    let relative_residual = sys.relative_residual(&full);
    if !(relative_residual <= opts.tol) {
        return Err(Error::NumericalFailure(format!(
            "direct solve reached relative residual {relative_residual:.3e} > {:.1e}",
            opts.tol
        )));
    }
    Ok(SolveResult {
        method: SolverKind::Direct,
        solution: full,
        relative_residual,
        iterations: None,
        converged: true,
        factorization: Some(FactorStats {
            dim: n,
            nnz: a.nnz(),
            refinement_steps: steps,
        }),
    })
}
