use nalgebra::{DMatrix, SymmetricEigen};
use sprs::CsMat;

use crate::cochain::{Cochain, Side};
use crate::error::{Error, Result};
use crate::mesh::EntityKind;
use crate::sparse::{lanczos, matvec, to_dense, SparseLu, TripletBuilder};
use crate::stokes::{assemble, AssemblyOptions, BoundaryData, Scheme, SchemeContext, SchemeOperators};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    /// `sqrt(λ)` for the smallest non-zero `λ` of `B M_u⁻¹ Bᵀ q = λ M_p q`.
    InfSup,
    /// Smallest `λ` of `A u = λ M_u u` on discretely divergence-free velocities.
    Poincare,
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infsup" | "inf-sup" => Ok(ProbeKind::InfSup),
            "poincare" => Ok(ProbeKind::Poincare),
            other => Err(Error::invalid(format!("unknown probe '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ProbeResult {
    pub kind: ProbeKind,
    pub scheme: Scheme,
    /// The reported constant.
    pub value: f64,
    /// Underlying generalized eigenvalue.
    pub eigenvalue: f64,
    pub lanczos_steps: usize,
    pub ritz_residual: f64,
}

const LANCZOS_MAX_STEPS: usize = 400;
const LANCZOS_TOL: f64 = 1e-13;
const DENSE_LIMIT: usize = 3000;

fn submatrix(a: &CsMat<f64>, rows: &[usize], cols: &[usize]) -> CsMat<f64> {
    let mut rpos = vec![usize::MAX; a.rows()];
    rows.iter().enumerate().for_each(|(k, &i)| rpos[i] = k);
    let mut cpos = vec![usize::MAX; a.cols()];
    cols.iter().enumerate().for_each(|(k, &j)| cpos[j] = k);
    let mut b = TripletBuilder::new(rows.len(), cols.len());
    for (&v, (i, j)) in a.iter() {
        if rpos[i] != usize::MAX && cpos[j] != usize::MAX {
            b.add(rpos[i], cpos[j], v);
        }
    }
    b.build()
}

/// Velocity unknowns entering the probes: all edges (vertex-based) or the
/// interior faces (cell-based).
fn velocity_dofs(ctx: &SchemeContext<'_>, scheme: Scheme) -> Result<Vec<usize>> {
    let m = ctx.mesh;
    let dofs: Vec<usize> = match scheme {
        Scheme::VertexBased => (0..m.num_edges()).collect(),
        Scheme::CellBased => (0..m.num_faces()).filter(|&f| !m.is_boundary_face(f)).collect(),
    };
    if dofs.is_empty() {
        return Err(Error::invalid(
            "the mesh has no interior faces, so the cell-based probes are undefined",
        ));
    }
    Ok(dofs)
}

/// `(B, M_u, M_p)` for the inf-sup probe.
fn infsup_parts(ctx: &SchemeContext<'_>, ops: &SchemeOperators) -> Result<(CsMat<f64>, CsMat<f64>, Vec<f64>)> {
    let dofs = velocity_dofs(ctx, ops.scheme)?;
    Ok(match ops.scheme {
        Scheme::VertexBased => {
            let gt = ctx.inc.grad.to_f64().transpose_view().to_csr();
            let b = (&gt * ops.h_rho.matrix()).to_csr();
            (b, ops.h_rho.matrix().clone(), ctx.dual.dual_cell_volumes().to_vec())
        }
        Scheme::CellBased => {
            let cells: Vec<usize> = (0..ctx.mesh.num_cells()).collect();
            let d = submatrix(&ctx.inc.div.to_f64(), &cells, &dofs).map(|v| -v);
            (d, submatrix(ops.h_rho.matrix(), &dofs, &dofs), ops.h_cell.diagonal())
        }
    })
}

fn mean_projector(weights: &[f64]) -> impl Fn(&mut [f64]) + '_ {
    let total: f64 = weights.iter().sum();
    move |x: &mut [f64]| {
        let mean = x.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>() / total;
        x.iter_mut().for_each(|v| *v -= mean);
    }
}

fn infsup(ctx: &SchemeContext<'_>, ops: &SchemeOperators) -> Result<ProbeResult> {
    let (b, m_u, m_p) = infsup_parts(ctx, ops)?;
    let (nu, np) = (m_u.rows(), m_p.len());
    let mut t = TripletBuilder::new(nu + np + 1, nu + np + 1);
    t.add_block(0, 0, &m_u, 1.0);
    t.add_block_transposed(0, nu, &b, 1.0);
    t.add_block(nu, 0, &b, 1.0);
    for (k, &w) in m_p.iter().enumerate() {
        t.add(nu + k, nu + np, w);
        t.add(nu + np, nu + k, w);
    }
    let lu = SparseLu::factor(&t.build())?;
    let project = mean_projector(&m_p);
    let mut apply = |r: &[f64]| -> Result<Vec<f64>> {
        let mut rhs = vec![0.0; nu + np + 1];
        for k in 0..np {
            rhs[nu + k] = m_p[k] * r[k];
        }
        let sol = lu.solve(&rhs);
        Ok(sol[nu..nu + np].iter().map(|q| -q).collect())
    };
    let mass = |x: &[f64]| -> Vec<f64> { x.iter().zip(&m_p).map(|(a, w)| a * w).collect() };
    let est = lanczos(np, &mut apply, &mass, Some(&project), LANCZOS_MAX_STEPS, LANCZOS_TOL)?;
    if !(est.largest > 0.0) {
        return Err(Error::NumericalFailure(format!(
            "inf-sup iteration produced a non-positive Ritz value {}",
            est.largest
        )));
    }
    let lambda = 1.0 / est.largest;
    Ok(ProbeResult {
        kind: ProbeKind::InfSup,
        scheme: ops.scheme,
        value: lambda.sqrt(),
        eigenvalue: lambda,
        lanczos_steps: est.steps,
        ritz_residual: est.residual,
    })
}

fn poincare(ctx: &SchemeContext<'_>, ops: &SchemeOperators) -> Result<ProbeResult> {
    let dofs = velocity_dofs(ctx, ops.scheme)?;
    let kind = match ops.scheme {
        Scheme::VertexBased => EntityKind::Face,
        Scheme::CellBased => EntityKind::Edge,
    };
    let load = Cochain::zeros(ctx.mesh, Side::Dual, kind);
    let sys = assemble(ctx, ops, &load, &BoundaryData::homogeneous(), AssemblyOptions::default())?;
    let lu = SparseLu::factor(sys.reduced_matrix())?;
    let u = sys.block("u").expect("velocity block").clone();
    let mut position = vec![usize::MAX; sys.dim()];
    sys.free_dofs().iter().enumerate().for_each(|(k, &i)| position[i] = k);
    let slots: Vec<usize> = dofs.iter().map(|&j| position[u.offset + j]).collect();
    let m_u = submatrix(ops.h_rho.matrix(), &dofs, &dofs);
    let n = dofs.len();
    let mut apply = |r: &[f64]| -> Result<Vec<f64>> {
        let mr = matvec(&m_u, r);
        let mut rhs = vec![0.0; sys.num_free()];
        slots.iter().zip(&mr).for_each(|(&s, v)| rhs[s] = *v);
        let sol = lu.solve(&rhs);
        Ok(slots.iter().map(|&s| sol[s]).collect())
    };
    let mass = |x: &[f64]| matvec(&m_u, x);
    let est = lanczos(n, &mut apply, &mass, None, LANCZOS_MAX_STEPS, LANCZOS_TOL)?;
    if !(est.largest > 0.0) {
        return Err(Error::NumericalFailure(format!(
            "Poincare iteration produced a non-positive Ritz value {}",
            est.largest
        )));
    }
    let lambda = 1.0 / est.largest;
    Ok(ProbeResult {
        kind: ProbeKind::Poincare,
        scheme: ops.scheme,
        value: lambda,
        eigenvalue: lambda,
        lanczos_steps: est.steps,
        ritz_residual: est.residual,
    })
}

/// Lanczos estimate of a discrete stability constant. Each application of
/// the inverse operator is one solve with a factorized saddle-point matrix,
/// so the divergence constraint is enforced inside every iteration.
pub fn stability_probe(ctx: &SchemeContext<'_>, ops: &SchemeOperators, kind: ProbeKind) -> Result<ProbeResult> {
    match kind {
        ProbeKind::InfSup => infsup(ctx, ops),
        ProbeKind::Poincare => poincare(ctx, ops),
    }
}

fn null_space(b: &DMatrix<f64>) -> DMatrix<f64> {
    let btb = b.transpose() * b;
    let scale = btb.amax().max(f64::MIN_POSITIVE);
    let eig = SymmetricEigen::new(btb);
    let cols: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k].abs() <= 1e-10 * scale)
        .collect();
    DMatrix::from_fn(b.ncols(), cols.len(), |i, k| eig.eigenvectors[(i, cols[k])])
}

/// Smallest eigenvalue of `a x = λ m x` with `m` symmetric positive definite.
fn generalized_eigenvalues(a: DMatrix<f64>, m: DMatrix<f64>) -> Result<Vec<f64>> {
    let l = m
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("mass matrix is not positive definite".into()))?
        .l();
    let linv = l
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Dense generalized eigensolve of the same quantity as [`stability_probe`],
/// for small meshes.
pub fn dense_probe(ctx: &SchemeContext<'_>, ops: &SchemeOperators, kind: ProbeKind) -> Result<f64> {
    let dofs = velocity_dofs(ctx, ops.scheme)?;
    if dofs.len() > DENSE_LIMIT {
        return Err(Error::invalid(format!(
            "dense probe limited to {DENSE_LIMIT} velocity unknowns, got {}",
            dofs.len()
        )));
    }
    let (b, m_u, m_p) = infsup_parts(ctx, ops)?;
    let (b, m_u) = (to_dense(&b), to_dense(&m_u));
    match kind {
        ProbeKind::InfSup => {
            let s = &b * m_u.clone().try_inverse().ok_or_else(|| Error::NumericalFailure("singular M_u".into()))? * b.transpose();
            let ev = generalized_eigenvalues(s, DMatrix::from_diagonal(&m_p.clone().into()))?;
            ev.get(1)
                .map(|l| l.sqrt())
                .ok_or_else(|| Error::invalid("inf-sup probe needs at least two pressure unknowns"))
        }
        ProbeKind::Poincare => {
            let a = match ops.scheme {
                Scheme::VertexBased => {
                    let c = to_dense(&ctx.inc.curl.to_f64());
                    c.transpose() * to_dense(ops.h_nu.matrix()) * c
                }
                Scheme::CellBased => {
                    let edges: Vec<usize> = (0..ctx.mesh.num_edges()).filter(|&e| !ctx.mesh.is_boundary_edge(e)).collect();
                    let hc = to_dense(&(ops.h_rho.matrix() * &ctx.inc.curl.to_f64()).to_csr());
                    let hc = DMatrix::from_fn(dofs.len(), edges.len(), |i, k| hc[(dofs[i], edges[k])]);
                    let hnu = to_dense(&submatrix(ops.h_nu.matrix(), &edges, &edges));
                    let hinv = hnu.try_inverse().ok_or_else(|| Error::NumericalFailure("singular H_nu".into()))?;
                    &hc * hinv * hc.transpose()
                }
            };
            let z = null_space(&b);
            if z.ncols() == 0 {
                return Err(Error::invalid("no divergence-free velocities on this mesh"));
            }
            let ev = generalized_eigenvalues(z.transpose() * a * &z, z.transpose() * m_u * &z)?;
            Ok(ev[0])
        }
    }
}
