//! Discrete Hodge operators mapping primal cochains to their dual partners.

use nalgebra::{DMatrix, Matrix3};
use sprs::CsMat;

use crate::error::{Error, Result};
use crate::geometry::{outer, Vec3};
use crate::mesh::{DualMesh, PrimalMesh};
use crate::sparse::{
    diagonal, is_diagonal, lanczos, matvec, norm_inf, symmetry_defect, write_matrix_market,
    SparseLu, TripletBuilder,
};

/// Per-cell material coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    rho: Vec<f64>,
    nu: Vec<f64>,
}

/// Which material coefficient a Hodge operator carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficient {
    /// Mass density ρ.
    Density,
    /// Viscosity ν.
    Viscosity,
}

impl MaterialField {
    pub fn new(rho: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        if rho.len() != nu.len() {
            return Err(Error::invalid("density and viscosity lengths differ"));
        }
        for (name, vals) in [("density", &rho), ("viscosity", &nu)] {
            if let Some((c, v)) = vals.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::invalid(format!("{name} in cell {c} must be positive, got {v}")));
            }
        }
        Ok(MaterialField { rho, nu })
    }

    pub fn uniform(num_cells: usize, rho: f64, nu: f64) -> Result<Self> {
        MaterialField::new(vec![rho; num_cells], vec![nu; num_cells])
    }

    /// ρ = ν = 1 everywhere.
    pub fn unit(mesh: &PrimalMesh) -> Self {
        MaterialField {
            rho: vec![1.0; mesh.num_cells()],
            nu: vec![1.0; mesh.num_cells()],
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }
    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn values(&self, which: Coefficient) -> &[f64] {
        match which {
            Coefficient::Density => &self.rho,
            Coefficient::Viscosity => &self.nu,
        }
    }

    /// Copy with one coefficient multiplied by `alpha`.
    pub fn scaled(&self, which: Coefficient, alpha: f64) -> Result<Self> {
        let mut out = self.clone();
        let v = match which {
            Coefficient::Density => &mut out.rho,
            Coefficient::Viscosity => &mut out.nu,
        };
        v.iter_mut().for_each(|x| *x *= alpha);
        MaterialField::new(out.rho, out.nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Pairing {
    /// Primal edge circulations to dual face fluxes.
    EdgeToDualFace,
    /// Primal face fluxes to dual edge circulations.
    FaceToDualEdge,
    /// Diagonal of primal cell volumes.
    CellVolume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HodgeDesign {
    Diagonal,
    ConsistentStabilized,
}

impl std::str::FromStr for HodgeDesign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(HodgeDesign::Diagonal),
            "consistent-stabilized" | "consistent" => Ok(HodgeDesign::ConsistentStabilized),
            other => Err(Error::invalid(format!("unknown Hodge design '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HodgeOperator {
    pairing: Pairing,
    design: HodgeDesign,
    coefficient: Option<Coefficient>,
    beta: f64,
    matrix: CsMat<f64>,
}

impl HodgeOperator {
    pub fn pairing(&self) -> Pairing {
        self.pairing
    }
    pub fn design(&self) -> HodgeDesign {
        self.design
    }
    pub fn coefficient(&self) -> Option<Coefficient> {
        self.coefficient
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn matrix(&self) -> &CsMat<f64> {
        &self.matrix
    }
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        matvec(&self.matrix, x)
    }
    /// `xᵀ H x`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }
    pub fn diagonal(&self) -> Vec<f64> {
        diagonal(&self.matrix)
    }
    pub fn write_matrix_market(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        write_matrix_market(&self.matrix, path)
    }
}

/// Local consistent + stabilized matrix for one cell.
///
/// `prim` rows reproduce primal reductions of constants (`prim_i · K`), `dual`
/// rows are the dual portions inside the cell.
fn local_consistent(prim: &[Vec3], dual: &[Vec3], vol: f64, m: f64, beta: f64) -> DMatrix<f64> {
    let n = prim.len();
    let e = DMatrix::from_fn(n, 3, |i, k| prim[i][k]);
    let s = DMatrix::from_fn(n, 3, |i, k| dual[i][k]);
    let consistent = &s * s.transpose() * (m / vol);
    let q = DMatrix::identity(n, n) - &e * s.transpose() / vol;
    let qtq = q.transpose() * &q;
    let tr_q = qtq.trace();
    let mut h = consistent.clone();
    if tr_q > 0.0 && beta > 0.0 {
        let mu = consistent.trace() / tr_q;
        h += qtq * (beta * mu);
    }
    // symmetrize against round-off in the products above
    (&h + h.transpose()) * 0.5
}

fn check_material(mesh: &PrimalMesh, coeff: &[f64]) -> Result<()> {
    if coeff.len() != mesh.num_cells() {
        return Err(Error::invalid(format!(
            "material has {} cells, mesh has {}",
            coeff.len(),
            mesh.num_cells()
        )));
    }
    if let Some((c, v)) = coeff.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("material in cell {c} must be positive, got {v}")));
    }
    Ok(())
}

/// Assembles a Hodge operator. `beta` weighs the stabilization of the
/// consistent design and is ignored otherwise. `coefficient` is ignored for
/// [`Pairing::CellVolume`].
pub fn build_hodge(
    mesh: &PrimalMesh,
    dual: &DualMesh,
    pairing: Pairing,
    material: &MaterialField,
    coefficient: Coefficient,
    design: HodgeDesign,
    beta: f64,
) -> Result<HodgeOperator> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("stabilization weight must be non-negative, got {beta}")));
    }
    if dual.num_dual_cells() != mesh.num_vertices() || dual.num_dual_faces() != mesh.num_edges() {
        return Err(Error::invalid("dual mesh does not belong to this primal mesh"));
    }
    for c in 0..mesh.num_cells() {
        if !(mesh.cell_volume(c) > 0.0) {
            return Err(Error::DegenerateMesh(format!(
                "cell {c} has volume {}",
                mesh.cell_volume(c)
            )));
        }
    }
    let coeff = material.values(coefficient);
    if pairing == Pairing::CellVolume {
        let n = mesh.num_cells();
        let mut b = TripletBuilder::new(n, n);
        for c in 0..n {
            b.add(c, c, mesh.cell_volume(c));
        }
        return Ok(HodgeOperator {
            pairing,
            design: HodgeDesign::Diagonal,
            coefficient: None,
            beta: 0.0,
            matrix: b.build(),
        });
    }
    check_material(mesh, coeff)?;
    let n = match pairing {
        Pairing::EdgeToDualFace => mesh.num_edges(),
        _ => mesh.num_faces(),
    };
    // local (global index, primal vector, dual portion) rows for cell c
    let local = |c: usize| -> Vec<(usize, Vec3, Vec3)> {
        match pairing {
            Pairing::EdgeToDualFace => mesh
                .cell_edges(c)
                .iter()
                .zip(dual.cell_face_portions(c))
                .map(|(&e, s)| (e, *mesh.edge_vector(e), *s))
                .collect(),
            _ => mesh
                .cell_faces(c)
                .iter()
                .zip(dual.cell_edge_portions(c))
                .map(|(&(f, _), d)| (f, *mesh.face_area_vector(f), *d))
                .collect(),
        }
    };
    let mut b = TripletBuilder::new(n, n);
    match design {
        HodgeDesign::Diagonal => {
            let primal_measure = |i: usize| match pairing {
                Pairing::EdgeToDualFace => mesh.edge_length(i),
                _ => mesh.face_area_vector(i).norm(),
            };
            let dual_measure = |i: usize| match pairing {
                Pairing::EdgeToDualFace => dual.dual_face_area(i).norm(),
                _ => dual.dual_edge_vector(i).norm(),
            };
            let mut weighted = vec![0.0; n];
            let mut weights = vec![0.0; n];
            for c in 0..mesh.num_cells() {
                for (i, _, portion) in local(c) {
                    let w = portion.norm();
                    weighted[i] += coeff[c] * w;
                    weights[i] += w;
                }
            }
            for i in 0..n {
                let d = dual_measure(i);
                let p = primal_measure(i);
                if !(weights[i] > 0.0 && d > 0.0 && p > 0.0) {
                    return Err(Error::DegenerateMesh(format!(
                        "{pairing:?} entity {i} has a vanishing primal or dual measure"
                    )));
                }
                b.add(i, i, weighted[i] / weights[i] * d / p);
            }
        }
        HodgeDesign::ConsistentStabilized => {
            for c in 0..mesh.num_cells() {
                let rows = local(c);
                let prim: Vec<Vec3> = rows.iter().map(|r| r.1).collect();
                let portions: Vec<Vec3> = rows.iter().map(|r| r.2).collect();
                let h = local_consistent(&prim, &portions, mesh.cell_volume(c), coeff[c], beta);
                for (a, ra) in rows.iter().enumerate() {
                    for (bb, rb) in rows.iter().enumerate() {
                        b.add(ra.0, rb.0, h[(a, bb)]);
                    }
                }
            }
        }
    }
    Ok(HodgeOperator {
        pairing,
        design,
        coefficient: Some(coefficient),
        beta: if design == HodgeDesign::ConsistentStabilized { beta } else { 0.0 },
        matrix: b.build(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SpdReport {
    pub symmetric: bool,
    pub symmetry_defect: f64,
    pub lambda_min: f64,
}

/// Relative symmetry tolerance used by [`check_spd`].
pub const SYMMETRY_TOL: f64 = 1e-14;

/// Symmetry and smallest-eigenvalue check. Diagonal operators report their
/// smallest entry; others run Lanczos on `H⁻¹`.
pub fn check_spd(h: &HodgeOperator) -> Result<SpdReport> {
    let m = h.matrix();
    let defect = symmetry_defect(m);
    let lambda_min = if is_diagonal(m) {
        diagonal(m).into_iter().fold(f64::INFINITY, f64::min)
    } else {
        let lu = SparseLu::factor(m)?;
        let n = m.rows();
        let mut apply = |x: &[f64]| Ok(lu.solve(x));
        let est = lanczos(n, &mut apply, &|x| x.to_vec(), None, n.min(300), 1e-10)?;
        if est.smallest < 0.0 {
            1.0 / est.smallest
        } else if est.largest > 0.0 {
            1.0 / est.largest
        } else {
            return Err(Error::NumericalFailure(format!(
                "inverse iteration on {:?} stalled at Ritz value {}",
                h.pairing(),
                est.largest
            )));
        }
    };
    Ok(SpdReport {
        symmetric: defect <= SYMMETRY_TOL,
        symmetry_defect: defect,
        lambda_min,
    })
}

/// `max_K ‖H R(K) − R̃(mK)‖∞ / ‖R̃(mK)‖∞` over the Cartesian unit vectors.
pub fn check_p0_consistency(
    h: &HodgeOperator,
    mesh: &PrimalMesh,
    dual: &DualMesh,
    material: &MaterialField,
) -> Result<f64> {
    let coeff = match h.coefficient() {
        Some(c) => material.values(c),
        None => {
            return Err(Error::invalid(
                "P0 consistency is defined for edge and face pairings only",
            ))
        }
    };
    check_material(mesh, coeff)?;
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let mut kv = Vec3::zeros();
        kv[k] = 1.0;
        let (primal, mut target) = match h.pairing() {
            Pairing::EdgeToDualFace => (
                (0..mesh.num_edges()).map(|e| mesh.edge_vector(e).dot(&kv)).collect::<Vec<_>>(),
                vec![0.0; mesh.num_edges()],
            ),
            _ => (
                (0..mesh.num_faces()).map(|f| mesh.face_area_vector(f).dot(&kv)).collect(),
                vec![0.0; mesh.num_faces()],
            ),
        };
        for c in 0..mesh.num_cells() {
            match h.pairing() {
                Pairing::EdgeToDualFace => {
                    for (&e, s) in mesh.cell_edges(c).iter().zip(dual.cell_face_portions(c)) {
                        target[e] += coeff[c] * s.dot(&kv);
                    }
                }
                _ => {
                    for (&(f, _), d) in mesh.cell_faces(c).iter().zip(dual.cell_edge_portions(c)) {
                        target[f] += coeff[c] * d.dot(&kv);
                    }
                }
            }
        }
        let image = h.apply(&primal);
        let diff: Vec<f64> = image.iter().zip(&target).map(|(a, b)| a - b).collect();
        let scale = norm_inf(&target);
        if scale > 0.0 {
            worst = worst.max(norm_inf(&diff) / scale);
        }
    }
    Ok(worst)
}

/// `Σ_e t_e ⊗ S̃_{e,c}` for one cell, exposed for diagnostics.
pub fn local_perot_matrix(mesh: &PrimalMesh, dual: &DualMesh, c: usize) -> Matrix3<f64> {
    mesh.cell_edges(c)
        .iter()
        .zip(dual.cell_face_portions(c))
        .fold(Matrix3::zeros(), |m, (&e, s)| m + outer(mesh.edge_vector(e), s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian_hex, build_dual, perturb_mesh, BoundingBox};
    use crate::sparse::to_dense;

    fn meshes() -> Vec<(PrimalMesh, DualMesh)> {
        let hex = build_cartesian_hex(2, 2, 2, BoundingBox::unit()).unwrap();
        let pert = perturb_mesh(&hex, 0.2, 42).unwrap();
        [hex, pert]
            .into_iter()
            .map(|m| {
                let d = build_dual(&m).unwrap();
                (m, d)
            })
            .collect()
    }

    #[test]
    fn unit_hex_diagonal_entries() {
        let m = build_cartesian_hex(1, 1, 1, BoundingBox::unit()).unwrap();
        let d = build_dual(&m).unwrap();
        let mat = MaterialField::unit(&m);
        let h = build_hodge(&m, &d, Pairing::EdgeToDualFace, &mat, Coefficient::Density, HodgeDesign::Diagonal, 1.0)
            .unwrap();
        for v in h.diagonal() {
            assert!((v - 0.25).abs() < 1e-15);
        }
        let min = h.diagonal().into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(check_spd(&h).unwrap().lambda_min, min);
    }

    #[test]
    fn consistent_design_is_p0_exact() {
        for (m, d) in meshes() {
            let mat = MaterialField::new(
                (0..m.num_cells()).map(|c| 1.0 + c as f64).collect(),
                vec![2.0; m.num_cells()],
            )
            .unwrap();
            for p in [Pairing::EdgeToDualFace, Pairing::FaceToDualEdge] {
                let h = build_hodge(&m, &d, p, &mat, Coefficient::Density, HodgeDesign::ConsistentStabilized, 1.0)
                    .unwrap();
                let r = check_p0_consistency(&h, &m, &d, &mat).unwrap();
                assert!(r <= 1e-12, "{p:?}: {r}");
            }
        }
    }

    #[test]
    fn diagonal_is_p0_exact_only_on_orthogonal_meshes() {
        let ms = meshes();
        let (m, d) = &ms[0];
        let mat = MaterialField::unit(m);
        for p in [Pairing::EdgeToDualFace, Pairing::FaceToDualEdge] {
            let h = build_hodge(m, d, p, &mat, Coefficient::Density, HodgeDesign::Diagonal, 1.0).unwrap();
            assert!(check_p0_consistency(&h, m, d, &mat).unwrap() <= 1e-12);
        }
        let (m, d) = &ms[1];
        let h = build_hodge(m, d, Pairing::EdgeToDualFace, &mat, Coefficient::Density, HodgeDesign::Diagonal, 1.0)
            .unwrap();
        assert!(check_p0_consistency(&h, m, d, &mat).unwrap() > 1e-6);
    }

    #[test]
    fn spd_matches_dense_oracle() {
        for (m, d) in meshes() {
            let mat = MaterialField::unit(&m);
            for p in [Pairing::EdgeToDualFace, Pairing::FaceToDualEdge] {
                let h = build_hodge(&m, &d, p, &mat, Coefficient::Viscosity, HodgeDesign::ConsistentStabilized, 1.0)
                    .unwrap();
                let rep = check_spd(&h).unwrap();
                assert!(rep.symmetric, "{}", rep.symmetry_defect);
                let oracle = to_dense(h.matrix()).symmetric_eigenvalues().min();
                assert!(oracle > 0.0);
                assert!((rep.lambda_min - oracle).abs() <= 1e-8 * oracle, "{} vs {oracle}", rep.lambda_min);
            }
        }
    }

    #[test]
    fn homogeneous_in_material() {
        let ms = meshes();
        let (m, d) = &ms[1];
        let mat = MaterialField::unit(m);
        let doubled = mat.scaled(Coefficient::Density, 2.0).unwrap();
        for design in [HodgeDesign::Diagonal, HodgeDesign::ConsistentStabilized] {
            let h1 = build_hodge(m, d, Pairing::EdgeToDualFace, &mat, Coefficient::Density, design, 1.0).unwrap();
            let h2 = build_hodge(m, d, Pairing::EdgeToDualFace, &doubled, Coefficient::Density, design, 1.0).unwrap();
            let diff = to_dense(h2.matrix()) - to_dense(h1.matrix()) * 2.0;
            assert_eq!(diff.amax(), 0.0);
        }
    }

    #[test]
    fn entries_couple_only_entities_of_a_common_cell() {
        let ms = meshes();
        let (m, d) = &ms[1];
        let mat = MaterialField::unit(m);
        let h = build_hodge(m, d, Pairing::EdgeToDualFace, &mat, Coefficient::Density, HodgeDesign::ConsistentStabilized, 1.0)
            .unwrap();
        for (_, (i, j)) in h.matrix().iter() {
            assert!((0..m.num_cells()).any(|c| {
                let ce = m.cell_edges(c);
                ce.binary_search(&i).is_ok() && ce.binary_search(&j).is_ok()
            }));
        }
    }

    #[test]
    fn rejects_non_positive_material() {
        assert!(matches!(MaterialField::uniform(3, 0.0, 1.0), Err(Error::InvalidArgument(_))));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn homogeneous_for_any_positive_factor(alpha in 0.01f64..100.0, beta in 0.1f64..4.0, seed in 0u64..1000) {
            let m = perturb_mesh(&build_cartesian_hex(2, 1, 1, BoundingBox::unit()).unwrap(), 0.2, seed).unwrap();
            let d = build_dual(&m).unwrap();
            let mat = MaterialField::unit(&m);
            let scaled = mat.scaled(Coefficient::Viscosity, alpha).unwrap();
            for design in [HodgeDesign::Diagonal, HodgeDesign::ConsistentStabilized] {
                for p in [Pairing::EdgeToDualFace, Pairing::FaceToDualEdge] {
                    let h1 = build_hodge(&m, &d, p, &mat, Coefficient::Viscosity, design, beta).unwrap();
                    let h2 = build_hodge(&m, &d, p, &scaled, Coefficient::Viscosity, design, beta).unwrap();
                    let (a1, a2) = (to_dense(h1.matrix()) * alpha, to_dense(h2.matrix()));
                    let scale = a1.amax();
                    proptest::prop_assert!(
                        approx::relative_eq!(a2, a1, epsilon = 1e-13 * scale, max_relative = 1e-12),
                        "{design:?} {p:?}"
                    );
                }
            }
        }
    }
}
