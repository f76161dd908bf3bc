//! Command-line front end: mesh generation and inspection, structural
//! verification, Stokes solves, convergence studies and stability probes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cdo_core::cochain::{Cochain, Side};
use cdo_core::harness::{
    level_mesh, manufactured_case, run_convergence, solve_case, structural_report, ConvergenceConfig, Discretization,
    MeshFamily, RunConfig, SolveSettings,
};
use cdo_core::hodge::HodgeDesign;
use cdo_core::mesh::{
    build_cartesian_hex, build_tet_mesh, export_vtk, load_mesh_json, perturb_mesh, save_mesh_json, BoundingBox,
    EntityKind, NamedField, PrimalMesh,
};
use cdo_core::solver::{dense_probe, stability_probe, ProbeKind, SolverKind};
use cdo_core::stokes::{LoadStrategy, Scheme};
use cdo_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cdo", version, about = "CDO Stokes schemes on polyhedral meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a hexahedral or tetrahedral mesh of a box.
    GenerateMesh(GenerateArgs),
    /// Print counts, measures and quality of a mesh.
    MeshInfo(MeshInfoArgs),
    /// Check exactness, commuting squares and Hodge operators on a mesh.
    Verify(VerifyArgs),
    /// Solve a manufactured case with the vertex-based scheme.
    SolveVb(SolveArgs),
    /// Solve a manufactured case with the cell-based scheme.
    SolveCb(SolveArgs),
    /// Run a manufactured-solution convergence study.
    Convergence(ConvergenceArgs),
    /// Estimate inf-sup and Poincaré constants.
    ProbeStability(ProbeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Hex,
    Tet,
}

impl From<Kind> for MeshFamily {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Hex => MeshFamily::Hex,
            Kind::Tet => MeshFamily::Tet,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Vb,
    Cb,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Vb => Scheme::VertexBased,
            SchemeArg::Cb => Scheme::CellBased,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DesignArg {
    Diagonal,
    ConsistentStabilized,
}

impl From<DesignArg> for HodgeDesign {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::Diagonal => HodgeDesign::Diagonal,
            DesignArg::ConsistentStabilized => HodgeDesign::ConsistentStabilized,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LoadArg {
    Raw,
    Potential,
}

impl From<LoadArg> for LoadStrategy {
    fn from(l: LoadArg) -> Self {
        match l {
            LoadArg::Raw => LoadStrategy::Raw,
            LoadArg::Potential => LoadStrategy::Potential,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Direct,
    Minres,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum ProbeArg {
    Infsup,
    Poincare,
    All,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Directory receiving every output file (created if missing).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "hex")]
    kind: Kind,
    /// Subdivisions per axis.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Subdivisions along x, y, z; overrides `--n`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    dims: Option<Vec<usize>>,
    /// Random interior vertex displacement relative to the local edge length.
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// File name of the mesh inside the output directory.
    #[arg(long, default_value = "mesh.json")]
    name: String,
    /// Also write a legacy VTK file.
    #[arg(long)]
    vtk: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct MeshInfoArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Stabilization weight of the consistent Hodge design.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[command(flatten)]
    out: OutputArgs,
}

/// Mesh given as a file or generated on the unit cube.
#[derive(Debug, Args)]
struct MeshSource {
    #[arg(long, conflicts_with_all = ["n", "kind"])]
    mesh: Option<PathBuf>,
    /// Generate an n³ mesh of the unit cube instead of reading one.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SettingsArgs {
    /// `key = value` file with design, beta, load, tol, maxit, seed, output.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    design: Option<DesignArg>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum)]
    load: Option<LoadArg>,
    #[arg(long, value_enum, default_value = "direct")]
    solver: SolverArg,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    source: MeshSource,
    #[arg(long, default_value = "trig")]
    case: String,
    #[command(flatten)]
    settings: SettingsArgs,
    /// Drop the zero-mean pressure row, leaving the system singular.
    #[arg(long)]
    no_constraint: bool,
    /// Also write the solution fields as legacy VTK.
    #[arg(long)]
    vtk: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct ConvergenceArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, default_value = "trig")]
    case: String,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    levels: Vec<usize>,
    #[arg(long, value_enum, default_value = "hex")]
    family: Kind,
    /// Perturb each level; without a value the default amplitude is used.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.15")]
    perturb: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Levels solved concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    settings: SettingsArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, value_enum, default_value = "all")]
    kind: ProbeArg,
    /// Probe a single mesh file instead of a refinement family.
    #[arg(long, conflicts_with = "levels")]
    mesh: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    levels: Vec<usize>,
    #[arg(long, value_enum, default_value = "hex")]
    family: Kind,
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "consistent-stabilized")]
    design: DesignArg,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Cross-check each estimate with a dense eigensolve (small meshes only).
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    out: OutputArgs,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Core(Error::SingularSystem { .. } | Error::NumericalFailure(_)) => EXIT_NUMERICAL,
            Failure::Core(_) => EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::GenerateMesh(a) => generate(a),
        Command::MeshInfo(a) => mesh_info(a),
        Command::Verify(a) => verify(a),
        Command::SolveVb(a) => solve(Scheme::VertexBased, a),
        Command::SolveCb(a) => solve(Scheme::CellBased, a),
        Command::Convergence(a) => convergence(a),
        Command::ProbeStability(a) => probe(a),
    }
}

fn output_dir(flag: &Option<PathBuf>, config: Option<&RunConfig>) -> Result<PathBuf, Failure> {
    let dir = flag
        .clone()
        .or_else(|| config.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Core(Error::Io { path: dir.clone(), source: e }))?;
    Ok(dir)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Failure::Core(Error::Io { path: path.clone(), source: e }))?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf, Failure> {
    let text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    write_file(dir, name, &(text + "\n"))
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

fn generate(a: GenerateArgs) -> CmdResult {
    let (nx, ny, nz) = match &a.dims {
        Some(d) => (d[0], d[1], d[2]),
        None => (a.n, a.n, a.n),
    };
    let base = match a.kind {
        Kind::Hex => build_cartesian_hex(nx, ny, nz, BoundingBox::unit())?,
        Kind::Tet => build_tet_mesh(nx, ny, nz, BoundingBox::unit())?,
    };
    let mut mesh = perturb_mesh(&base, a.perturb, a.seed)?;
    mesh.set_name(Some(format!("{:?}-{nx}x{ny}x{nz}", a.kind).to_lowercase()));
    let dir = output_dir(&a.out.output, None)?;
    let path = dir.join(&a.name);
    save_mesh_json(&mesh, &path)?;
    if a.vtk {
        export_vtk(&mesh, &[], path.with_extension("vtk"))?;
    }
    print!("{}", mesh_table(&mesh));
    println!("wrote {}", path.display());
    Ok(())
}

fn mesh_table(mesh: &PrimalMesh) -> String {
    let r = mesh.report();
    let mut s = String::new();
    let _ = writeln!(s, "vertices            {}", r.vertices);
    let _ = writeln!(s, "edges               {}", r.edges);
    let _ = writeln!(s, "faces               {}", r.faces);
    let _ = writeln!(s, "cells               {}", r.cells);
    let _ = writeln!(s, "euler characteristic {}", r.euler_characteristic);
    let _ = writeln!(s, "total volume        {:.12}", r.total_volume);
    let _ = writeln!(s, "min cell volume     {:.6e}", r.min_volume);
    let _ = writeln!(s, "max aspect          {:.4}", r.quality.max_aspect);
    let _ = writeln!(s, "mesh size h         {:.6e}", mesh.mesh_size());
    s
}

fn mesh_info(a: MeshInfoArgs) -> CmdResult {
    let mesh = load_mesh_json(&a.mesh)?;
    let dir = output_dir(&a.out.output, None)?;
    print!("{}", mesh_table(&mesh));
    write_json(
        &dir,
        "mesh-info.json",
        &serde_json::json!({
            "mesh": a.mesh,
            "name": mesh.name(),
            "report": to_value(&mesh.report()),
            "mesh_size": mesh.mesh_size(),
        }),
    )?;
    Ok(())
}

fn verify(a: VerifyArgs) -> CmdResult {
    let mesh = load_mesh_json(&a.mesh)?;
    let dir = output_dir(&a.out.output, None)?;
    let disc = Discretization::new(mesh)?;
    let r = structural_report(&disc, a.beta)?;
    println!("CG={}", r.complex.max_cg);
    println!("DC={}", r.complex.max_dc);
    if let Some(ranks) = &r.complex.ranks {
        println!(
            "ranks G={} C={} D={} exact-at-edges={} exact-at-faces={}",
            ranks.rank_g, ranks.rank_c, ranks.rank_d, ranks.exact_at_edges, ranks.exact_at_faces
        );
    }
    for c in &r.commuting {
        println!("commuting {:<10} {:.3e}", c.square, c.residual);
    }
    for h in &r.hodge {
        println!(
            "hodge {:<15} {:<22} symmetry {:.1e}  lambda_min {:.4e}  p0 {:.1e}",
            format!("{:?}", h.pairing),
            format!("{:?}", h.design),
            h.symmetry_defect,
            h.lambda_min,
            h.p0_residual
        );
    }
    write_json(&dir, "verify.json", &to_value(&r))?;
    if !r.complex.is_complex() {
        return Err(Failure::Core(Error::NumericalFailure(format!(
            "incidence operators do not form a complex (CG={}, DC={})",
            r.complex.max_cg, r.complex.max_dc
        ))));
    }
    Ok(())
}

fn read_config(path: &Option<PathBuf>) -> Result<Option<RunConfig>, Failure> {
    Ok(match path {
        Some(p) => Some(RunConfig::load(p)?),
        None => None,
    })
}

/// Defaults, then the config file, then explicit flags.
fn resolve_settings(a: &SettingsArgs, config: Option<&RunConfig>) -> SolveSettings {
    let mut s = SolveSettings::default();
    if let Some(c) = config {
        c.apply(&mut s);
    }
    if let Some(d) = a.design {
        s.design = d.into();
    }
    if let Some(b) = a.beta {
        s.beta = b;
    }
    if let Some(l) = a.load {
        s.load = l.into();
    }
    if let Some(t) = a.tol {
        s.tol = t;
    }
    if let Some(m) = a.maxit {
        s.maxit = m;
    }
    s.solver = match a.solver {
        SolverArg::Direct => SolverKind::Direct,
        SolverArg::Minres => SolverKind::Minres,
    };
    s
}

fn load_source(src: &MeshSource, seed: u64) -> Result<PrimalMesh, Failure> {
    match (&src.mesh, src.n) {
        (Some(path), _) => {
            let mesh = load_mesh_json(path)?;
            Ok(perturb_mesh(&mesh, src.perturb, seed)?)
        }
        (None, Some(n)) => Ok(level_mesh(src.kind.unwrap_or(Kind::Hex).into(), n, src.perturb, seed)?),
        (None, None) => Err(Failure::Usage("give either --mesh FILE or --n N".into())),
    }
}

fn solve(scheme: Scheme, a: SolveArgs) -> CmdResult {
    let config = read_config(&a.settings.config)?;
    let mut settings = resolve_settings(&a.settings, config.as_ref());
    settings.constraint = !a.no_constraint;
    let seed = a.source.seed.or(config.as_ref().and_then(|c| c.seed)).unwrap_or(0);
    let case = manufactured_case(&a.case)?;
    let mesh = load_source(&a.source, seed)?;
    let dir = output_dir(&a.out.output, config.as_ref())?;
    let disc = Discretization::new(mesh)?;
    let sol = solve_case(&disc, scheme, &case, &settings)?;
    let sys = &sol.system;
    let x = &sol.solve.solution;

    println!("{scheme} / case {} / {:?} load / {:?} Hodge", case.name, settings.load, settings.design);
    println!("unknowns            {}", sys.num_unknowns());
    println!("constraint rows     {}", usize::from(sys.has_constraint()));
    println!("solver              {:?}", sol.solve.method);
    if let Some(it) = sol.solve.iterations {
        println!("iterations          {it}");
    }
    println!("relative residual   {:.3e}", sol.solve.relative_residual);
    println!("e_u                 {:.6e}", sol.errors.e_u);
    println!("e_p                 {:.6e}", sol.errors.e_p);
    println!("e_w                 {:.6e}", sol.errors.e_w);
    println!("max mass residual   {:.3e}", sol.conservation.max_mass);
    println!("max momentum resid. {:.3e}", sol.conservation.max_momentum);

    let blocks: serde_json::Map<String, serde_json::Value> = sys
        .blocks()
        .iter()
        .map(|b| (b.name.to_string(), to_value(&x[b.range()].to_vec())))
        .collect();
    let name = format!("solution-{}.json", scheme.short_name());
    write_json(
        &dir,
        &name,
        &serde_json::json!({
            "scheme": scheme,
            "case": case.name,
            "settings": to_value(&settings),
            "mesh": { "name": disc.mesh.name(), "h": disc.mesh.mesh_size(), "report": to_value(&disc.mesh.report()) },
            "unknowns": sys.num_unknowns(),
            "dim": sys.dim(),
            "solver": {
                "method": sol.solve.method,
                "relative_residual": sol.solve.relative_residual,
                "iterations": sol.solve.iterations,
                "converged": sol.solve.converged,
            },
            "errors": to_value(&sol.errors),
            "conservation": {
                "max_mass": sol.conservation.max_mass,
                "max_momentum": sol.conservation.max_momentum,
                "rhs_inf": sol.conservation.rhs_inf,
            },
            "solution": blocks,
        }),
    )?;
    if a.vtk {
        let block = |n: &str| sys.slice(x, n).map(|v| v.to_vec());
        let mut fields = Vec::new();
        match scheme {
            Scheme::VertexBased => {
                fields.push(("velocity", Cochain::new(Side::Primal, EntityKind::Edge, block("u").unwrap())));
                fields.push(("pressure", Cochain::new(Side::Primal, EntityKind::Vertex, block("p").unwrap())));
            }
            Scheme::CellBased => {
                fields.push(("vorticity", Cochain::new(Side::Primal, EntityKind::Edge, block("omega").unwrap())));
                fields.push(("velocity", Cochain::new(Side::Primal, EntityKind::Face, block("u").unwrap())));
                fields.push(("pressure", Cochain::new(Side::Dual, EntityKind::Vertex, block("p").unwrap())));
            }
        }
        let named: Vec<NamedField<'_>> = fields.iter().map(|(n, c)| NamedField::new(n, c)).collect();
        export_vtk(&disc.mesh, &named, dir.join(format!("solution-{}.vtk", scheme.short_name())))?;
    }
    Ok(())
}

fn convergence(a: ConvergenceArgs) -> CmdResult {
    let config = read_config(&a.settings.config)?;
    let settings = resolve_settings(&a.settings, config.as_ref());
    let dir = output_dir(&a.out.output, config.as_ref())?;
    let cfg = ConvergenceConfig {
        scheme: a.scheme.into(),
        case: a.case.clone(),
        levels: a.levels.clone(),
        family: a.family.into(),
        amplitude: a.perturb.unwrap_or(0.0),
        seed: a.seed.or(config.as_ref().and_then(|c| c.seed)).unwrap_or(0),
        settings,
        jobs: a.jobs,
    };
    let report = run_convergence(&cfg)?;
    print!("{}", report.table());
    write_file(&dir, "report.csv", &report.to_csv())?;
    write_file(&dir, "report.json", &(report.to_json() + "\n"))?;
    Ok(())
}

fn probe(a: ProbeArgs) -> CmdResult {
    let dir = output_dir(&a.out.output, None)?;
    let scheme: Scheme = a.scheme.into();
    let settings = SolveSettings {
        design: a.design.into(),
        beta: a.beta,
        ..SolveSettings::default()
    };
    let kinds: Vec<ProbeKind> = match a.kind {
        ProbeArg::Infsup => vec![ProbeKind::InfSup],
        ProbeArg::Poincare => vec![ProbeKind::Poincare],
        ProbeArg::All => vec![ProbeKind::InfSup, ProbeKind::Poincare],
    };
    let meshes: Vec<(String, PrimalMesh)> = match &a.mesh {
        Some(p) => vec![(p.display().to_string(), load_mesh_json(p)?)],
        None => a
            .levels
            .iter()
            .map(|&n| Ok((n.to_string(), level_mesh(a.family.into(), n, a.perturb, a.seed)?)))
            .collect::<Result<_, Error>>()?,
    };
    let mut rows = Vec::new();
    println!("{:<8} {:<10} {:>14} {:>10} {:>7} {:>14}", "level", "probe", "estimate", "ratio", "steps", "oracle");
    for kind in &kinds {
        let mut prev: Option<f64> = None;
        for (label, mesh) in &meshes {
            let disc = Discretization::new(mesh.clone())?;
            let ops = disc.operators(scheme, &settings)?;
            let r = stability_probe(&disc.context(), &ops, *kind)?;
            let oracle = if a.oracle { Some(dense_probe(&disc.context(), &ops, *kind)?) } else { None };
            let ratio = prev.map(|p| r.value / p);
            println!(
                "{:<8} {:<10} {:>14.8} {:>10} {:>7} {:>14}",
                label,
                format!("{kind:?}").to_lowercase(),
                r.value,
                ratio.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
                r.lanczos_steps,
                oracle.map(|v| format!("{v:.8}")).unwrap_or_else(|| "-".into())
            );
            rows.push(serde_json::json!({
                "level": label,
                "h": mesh.mesh_size(),
                "probe": to_value(&r),
                "ratio_to_previous": ratio,
                "oracle": oracle,
            }));
            prev = Some(r.value);
        }
    }
    write_json(
        &dir,
        "probes.json",
        &serde_json::json!({
            "scheme": scheme,
            "design": settings.design,
            "beta": settings.beta,
            "mesh_family": if a.mesh.is_some() { "file".to_string() } else { MeshFamily::from(a.family).label().to_string() },
            "perturbation": a.perturb,
            "seed": a.seed,
            "results": rows,
        }),
    )?;
    Ok(())
}
