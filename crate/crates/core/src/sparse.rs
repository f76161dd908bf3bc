//! Sparse matrix utilities shared by the operators and solvers.

use std::path::Path;

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

/// Accumulates `(row, col, value)` entries; duplicates are summed in insertion order.
#[derive(Debug)]
pub struct TripletBuilder {
    tri: TriMat<f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            tri: TriMat::new((nrows, ncols)),
        }
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.tri.add_triplet(r, c, v);
        }
    }

    /// Adds `scale * m` with its top-left corner at `(r0, c0)`.
    pub fn add_block(&mut self, r0: usize, c0: usize, m: &CsMat<f64>, scale: f64) {
        for (&v, (r, c)) in m.iter() {
            self.add(r0 + r, c0 + c, scale * v);
        }
    }

    /// Adds `scale * mᵀ` with its top-left corner at `(r0, c0)`.
    pub fn add_block_transposed(&mut self, r0: usize, c0: usize, m: &CsMat<f64>, scale: f64) {
        for (&v, (r, c)) in m.iter() {
            self.add(r0 + c, c0 + r, scale * v);
        }
    }

    pub fn build(self) -> CsMat<f64> {
        self.tri.to_csr()
    }
}

pub fn matvec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.cols(), x.len(), "matvec dimension mismatch");
    if a.is_csr() {
        a.outer_iterator()
            .map(|row| row.iter().map(|(j, &v)| v * x[j]).sum())
            .collect()
    } else {
        let mut y = vec![0.0; a.rows()];
        for (j, col) in a.outer_iterator().enumerate() {
            for (i, &v) in col.iter() {
                y[i] += v * x[j];
            }
        }
        y
    }
}

/// `Aᵀ x`.
pub fn matvec_transposed(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    matvec(&a.transpose_view().to_owned(), x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs_entry(a: &CsMat<f64>) -> f64 {
    a.iter().fold(0.0, |m, (v, _)| m.max(v.abs()))
}

/// `max |A - Aᵀ| / max |A|` (0 for the zero matrix).
pub fn symmetry_defect(a: &CsMat<f64>) -> f64 {
    if a.rows() != a.cols() {
        return f64::INFINITY;
    }
    let at = a.transpose_view().to_csr();
    let a = a.to_csr();
    let diff = &a - &at;
    let scale = max_abs_entry(&a);
    if scale == 0.0 {
        0.0
    } else {
        max_abs_entry(&diff) / scale
    }
}

pub fn to_dense(a: &CsMat<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.rows(), a.cols());
    for (&v, (r, c)) in a.iter() {
        d[(r, c)] += v;
    }
    d
}

pub fn diagonal(a: &CsMat<f64>) -> Vec<f64> {
    let mut d = vec![0.0; a.rows().min(a.cols())];
    for (&v, (r, c)) in a.iter() {
        if r == c {
            d[r] += v;
        }
    }
    d
}

pub fn is_diagonal(a: &CsMat<f64>) -> bool {
    a.iter().all(|(&v, (r, c))| r == c || v == 0.0)
}

pub fn write_matrix_market(a: &CsMat<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    sprs::io::write_matrix_market(path, a).map_err(|e| Error::io(path, e))
}

/// Sparse LU factorization with partial pivoting.
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

impl SparseLu {
    pub fn factor(a: &CsMat<f64>) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::invalid(format!(
                "cannot factor a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let triplets: Vec<_> = a.iter().map(|(&v, (r, c))| Triplet::new(r, c, v)).collect();
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.rows(), a.cols(), &triplets)
            .map_err(|e| Error::NumericalFailure(format!("sparse matrix construction: {e:?}")))?;
        let lu = m
            .sp_lu()
            .map_err(|e| Error::NumericalFailure(format!("LU factorization: {e:?}")))?;
        Ok(SparseLu { n: a.rows(), lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`; a singular factor shows up as non-finite entries.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }
}

/// Outcome of a Lanczos run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RitzEstimate {
    /// Largest algebraic Ritz value.
    pub largest: f64,
    /// Smallest algebraic Ritz value.
    pub smallest: f64,
    /// Residual bound of the largest Ritz pair, relative to its value.
    pub residual: f64,
    pub steps: usize,
}

/// Seeded pseudo-random start vector, so that no eigenspace is missed on
/// symmetric meshes.
pub fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..n).map(|_| rng.random_range(0.5..1.5)).collect()
}

/// Lanczos with full reorthogonalization for an operator `T` self-adjoint in
/// the inner product `<x, y> = xᵀ M y`. `project` (optional) is applied to the
/// start vector and to every new direction, restricting the iteration to a
/// subspace left invariant by `T`.
pub fn lanczos(
    n: usize,
    apply: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    mass: &dyn Fn(&[f64]) -> Vec<f64>,
    project: Option<&dyn Fn(&mut [f64])>,
    max_steps: usize,
    tol: f64,
) -> Result<RitzEstimate> {
    let mut v = start_vector(n);
    if let Some(p) = project {
        p(&mut v);
    }
    let mut mv = mass(&v);
    let nrm = dot(&v, &mv);
    if !(nrm > 0.0) {
        return Err(Error::NumericalFailure(
            "Lanczos start vector has no component in the search space".into(),
        ));
    }
    let nrm = nrm.sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    mv.iter_mut().for_each(|x| *x /= nrm);

    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut mbasis: Vec<Vec<f64>> = vec![mv];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let steps = max_steps.min(n).max(1);
    let mut last = None;
    for j in 0..steps {
        let mut w = apply(&basis[j])?;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "Lanczos breakdown: operator returned non-finite values at step {j}"
            )));
        }
        if let Some(p) = project {
            p(&mut w);
        }
        let a = dot(&mbasis[j], &w);
        alpha.push(a);
        for _ in 0..2 {
            for (q, mq) in basis.iter().zip(&mbasis) {
                let c = dot(mq, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let mw = mass(&w);
        let b2 = dot(&w, &mw);
        let b = if b2 > 0.0 { b2.sqrt() } else { 0.0 };

        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (imax, &largest) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .expect("non-empty tridiagonal");
        let smallest = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let residual = (b * eig.eigenvectors[(k - 1, imax)]).abs() / largest.abs().max(f64::MIN_POSITIVE);
        let est = RitzEstimate {
            largest,
            smallest,
            residual,
            steps: k,
        };
        last = Some(est);
        let scale = alpha.iter().chain(&beta).fold(0.0f64, |m, v| m.max(v.abs()));
        if residual <= tol || b <= 1e-14 * scale || j + 1 == steps {
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
        mbasis.push(mw.into_iter().map(|x| x / b).collect());
    }
    let est = last.expect("at least one Lanczos step");
    if !est.largest.is_finite() {
        return Err(Error::NumericalFailure("Lanczos produced non-finite Ritz values".into()));
    }
    Ok(est)
}
