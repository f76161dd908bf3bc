use cdo_core::harness::{manufactured_case, solve_case, Discretization, SolveSettings};
use cdo_core::mesh::{build_tet_mesh, load_mesh_json, perturb_mesh, save_mesh_json, BoundingBox};
use cdo_core::stokes::{LoadStrategy, Scheme};

#[test]
fn mesh_file_to_solution_on_perturbed_tets() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tets.json");
    let mesh = perturb_mesh(&build_tet_mesh(2, 2, 2, BoundingBox::unit()).unwrap(), 0.15, 7).unwrap();
    save_mesh_json(&mesh, &path).unwrap();
    let disc = Discretization::new(load_mesh_json(&path).unwrap()).unwrap();
    let case = manufactured_case("poly").unwrap();
    for scheme in [Scheme::VertexBased, Scheme::CellBased] {
        for load in [LoadStrategy::Raw, LoadStrategy::Potential] {
            let settings = SolveSettings { load, ..SolveSettings::default() };
            let sol = solve_case(&disc, scheme, &case, &settings).unwrap();
            assert!(sol.solve.relative_residual <= 1e-10, "{scheme:?} {load:?}");
            assert!(sol.conservation.within(1e-10, 1e-12), "{scheme:?} {load:?}");
            let e = &sol.errors;
            assert!(e.e_u.max(e.e_p).max(e.e_w) <= 1e-9, "{scheme:?} {load:?}: {e:?}");
        }
    }
}

#[test]
fn minres_and_direct_agree_on_trig() {
    let mesh = build_tet_mesh(2, 2, 2, BoundingBox::unit()).unwrap();
    let disc = Discretization::new(mesh).unwrap();
    let case = manufactured_case("trig").unwrap();
    let direct = solve_case(&disc, Scheme::VertexBased, &case, &SolveSettings::default()).unwrap();
    let settings = SolveSettings {
        solver: cdo_core::solver::SolverKind::Minres,
        tol: 1e-12,
        maxit: 50_000,
        ..SolveSettings::default()
    };
    let iterative = solve_case(&disc, Scheme::VertexBased, &case, &settings).unwrap();
    assert!((direct.errors.e_u - iterative.errors.e_u).abs() <= 1e-6 * direct.errors.e_u);
}
