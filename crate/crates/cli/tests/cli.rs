use std::path::Path;
use std::process::Command;

use cdo_cli::{run, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

fn argv(args: &[&str]) -> Vec<String> {
    std::iter::once("cdo").chain(args.iter().copied()).map(String::from).collect()
}

fn generate(dir: &Path, extra: &[&str]) -> String {
    let out = dir.to_str().unwrap();
    let mut args = vec!["generate-mesh", "--output", out];
    args.extend_from_slice(extra);
    assert_eq!(run(argv(&args)), EXIT_OK);
    dir.join("mesh.json").to_str().unwrap().to_string()
}

#[test]
fn generate_info_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = generate(dir.path(), &["--kind", "tet", "--n", "2", "--perturb", "0.1", "--seed", "4", "--vtk"]);
    assert!(dir.path().join("mesh.vtk").exists());
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(argv(&["mesh-info", "--mesh", &mesh, "--output", out])), EXIT_OK);
    let info: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mesh-info.json")).unwrap()).unwrap();
    assert_eq!(info["report"]["cells"], 48);
    assert_eq!(run(argv(&["verify", "--mesh", &mesh, "--output", out])), EXIT_OK);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(v["complex"]["max_cg"], 0);
    assert_eq!(v["complex"]["max_dc"], 0);
    for c in v["commuting"].as_array().unwrap() {
        assert!(c["residual"].as_f64().unwrap() <= 1e-12);
    }
}

#[test]
fn verify_prints_zero_defects() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = generate(dir.path(), &["--n", "2"]);
    let out = Command::new(env!("CARGO_BIN_EXE_cdo"))
        .args(["verify", "--mesh", &mesh, "--output", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("CG=0") && stdout.contains("DC=0"), "{stdout}");
    assert!(stdout.contains("commuting gradient"));
}

#[test]
fn solve_both_schemes_and_write_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for cmd in ["solve-vb", "solve-cb"] {
        let code = run(argv(&[cmd, "--n", "2", "--case", "trig", "--output", out, "--vtk"]));
        assert_eq!(code, EXIT_OK, "{cmd}");
    }
    let vb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solution-vb.json")).unwrap()).unwrap();
    // 27 vertices + 54 edges on the 2³ hex mesh
    assert_eq!(vb["unknowns"], 81);
    assert_eq!(vb["solution"]["p"].as_array().unwrap().len(), 27);
    let cb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solution-cb.json")).unwrap()).unwrap();
    assert_eq!(cb["unknowns"], 54 + 36 + 8);
    assert!(dir.path().join("solution-cb.vtk").exists());
}

#[test]
fn missing_constraint_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cdo"))
        .args(["solve-vb", "--n", "2", "--no-constraint", "--output", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_NUMERICAL));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("singular system"), "{stderr}");
    assert!(stderr.contains("constant pressure mode"), "{stderr}");
}

#[test]
fn convergence_writes_one_row_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = run(argv(&["convergence", "--scheme", "vb", "--case", "trig", "--levels", "2,4,8", "--output", out]));
    assert_eq!(code, EXIT_OK);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "level,h,dofs,e_u,e_p,e_w,order_u,order_p,order_w,residual,iters");
    assert_eq!(lines.len(), 4);
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn convergence_is_reproducible_with_jobs_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "design = consistent-stabilized\nload = potential\nseed = 3\noutput = ignored\n").unwrap();
    let mut reports = Vec::new();
    for jobs in ["1", "2"] {
        let sub = dir.path().join(format!("jobs{jobs}"));
        let code = run(argv(&[
            "convergence", "--scheme", "cb", "--levels", "1,2", "--perturb", "--jobs", jobs,
            "--config", cfg.to_str().unwrap(), "--output", sub.to_str().unwrap(),
        ]));
        assert_eq!(code, EXIT_OK);
        reports.push(std::fs::read(sub.join("report.csv")).unwrap());
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(sub.join("report.json")).unwrap()).unwrap();
        assert_eq!(json["seed"], 3);
        assert_eq!(json["amplitude"], 0.15);
        assert_eq!(json["settings"]["load"], "potential");
    }
    assert_eq!(reports[0], reports[1]);
    assert!(!Path::new("ignored").exists());
}

#[test]
fn probe_stability_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = run(argv(&["probe-stability", "--scheme", "vb", "--levels", "1,2", "--oracle", "--output", out]));
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("probes.json")).unwrap()).unwrap();
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let est = r["probe"]["value"].as_f64().unwrap();
        let oracle = r["oracle"].as_f64().unwrap();
        assert!((est - oracle).abs() <= 1e-8 * oracle, "{r}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(argv(&["solve-vb", "--bogus"])), EXIT_USAGE);
    assert_eq!(run(argv(&["frobnicate"])), EXIT_USAGE);
    assert_eq!(run(argv(&["convergence", "--scheme", "vb", "--case", "nope"])), EXIT_USAGE);
    assert_eq!(run(argv(&["solve-cb"])), EXIT_USAGE);
    assert_eq!(run(argv(&["--help"])), EXIT_OK);
    let out = Command::new(env!("CARGO_BIN_EXE_cdo")).args(["verify", "--nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8(out.stderr).unwrap().contains("Usage"));
}
