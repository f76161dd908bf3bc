use std::fmt::Write as _;

use super::cases::manufactured_case;
use super::errors::ErrorRecord;
use super::pipeline::{solve_case, Discretization, SolveSettings};
use crate::error::{Error, Result};
use crate::mesh::{build_cartesian_hex, build_tet_mesh, perturb_mesh, BoundingBox, PrimalMesh};
use crate::stokes::Scheme;

pub const CSV_HEADER: &str = "level,h,dofs,e_u,e_p,e_w,order_u,order_p,order_w,residual,iters";

/// Amplitude used when a perturbed family is requested without an explicit value.
pub const DEFAULT_PERTURBATION: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFamily {
    Hex,
    Tet,
}

impl MeshFamily {
    /// The families are generic stand-ins rather than benchmark polyhedral
    /// meshes, and reports say so.
    pub fn label(self) -> &'static str {
        match self {
            MeshFamily::Hex => "uniform hexahedra on the unit cube (stand-in family)",
            MeshFamily::Tet => "Kuhn tetrahedra on the unit cube (stand-in family)",
        }
    }
}

impl std::str::FromStr for MeshFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hex" => Ok(MeshFamily::Hex),
            "tet" => Ok(MeshFamily::Tet),
            other => Err(Error::invalid(format!("unknown mesh family '{other}' (expected hex or tet)"))),
        }
    }
}

/// Mesh of level `n` (n³ blocks of the unit cube), perturbed with the seed
/// `seed + n` when `amplitude > 0`.
pub fn level_mesh(family: MeshFamily, n: usize, amplitude: f64, seed: u64) -> Result<PrimalMesh> {
    let base = match family {
        MeshFamily::Hex => build_cartesian_hex(n, n, n, BoundingBox::unit())?,
        MeshFamily::Tet => build_tet_mesh(n, n, n, BoundingBox::unit())?,
    };
    perturb_mesh(&base, amplitude, seed.wrapping_add(n as u64))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceConfig {
    pub scheme: Scheme,
    pub case: String,
    pub levels: Vec<usize>,
    pub family: MeshFamily,
    pub amplitude: f64,
    pub seed: u64,
    pub settings: SolveSettings,
    /// Levels solved concurrently.
    pub jobs: usize,
}

impl ConvergenceConfig {
    pub fn new(scheme: Scheme, case: &str) -> Self {
        ConvergenceConfig {
            scheme,
            case: case.into(),
            levels: vec![2, 4, 8],
            family: MeshFamily::Hex,
            amplitude: 0.0,
            seed: 0,
            settings: SolveSettings::default(),
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub e_u: f64,
    pub e_p: f64,
    pub e_w: f64,
    pub order_u: Option<f64>,
    pub order_p: Option<f64>,
    pub order_w: Option<f64>,
    pub residual: f64,
    pub iters: Option<usize>,
    /// Largest mass or momentum residual over `‖b‖∞`.
    pub conservation: f64,
    pub reference: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceReport {
    pub scheme: Scheme,
    pub case: String,
    pub mesh_family: String,
    pub amplitude: f64,
    pub seed: u64,
    pub settings: SolveSettings,
    pub levels: Vec<LevelResult>,
}

/// `log(e_prev / e) / log(h_prev / h)`; undefined when either error vanishes.
pub fn observed_order(e_prev: f64, e: f64, h_prev: f64, h: f64) -> Option<f64> {
    (e_prev > 0.0 && e > 0.0 && h_prev != h).then(|| (e_prev / e).ln() / (h_prev / h).ln())
}

fn csv_float(v: f64) -> String {
    format!("{v:.6e}")
}

fn csv_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.levels {
            let order = |o: Option<f64>| o.map(csv_float).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.level,
                csv_float(r.h),
                r.dofs,
                csv_float(r.e_u),
                csv_float(r.e_p),
                csv_float(r.e_w),
                order(r.order_u),
                order(r.order_p),
                order(r.order_w),
                csv_float(r.residual),
                csv_opt(r.iters)
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table for terminals.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{} / case {} / {}\n{:>5} {:>10} {:>8} {:>10} {:>10} {:>10} {:>7} {:>7} {:>7}\n",
            self.scheme, self.case, self.mesh_family, "level", "h", "dofs", "e_u", "e_p", "e_w", "ord_u", "ord_p", "ord_w"
        );
        for r in &self.levels {
            let o = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:>5} {:>10.4e} {:>8} {:>10.3e} {:>10.3e} {:>10.3e} {:>7} {:>7} {:>7}",
                r.level,
                r.h,
                r.dofs,
                r.e_u,
                r.e_p,
                r.e_w,
                o(r.order_u),
                o(r.order_p),
                o(r.order_w)
            );
        }
        s
    }
}

fn run_level(cfg: &ConvergenceConfig, n: usize) -> Result<(f64, usize, ErrorRecord, f64, Option<usize>, f64)> {
    let case = manufactured_case(&cfg.case)?;
    let mesh = level_mesh(cfg.family, n, cfg.amplitude, cfg.seed)?;
    let h = mesh.mesh_size();
    let disc = Discretization::new(mesh)?;
    let sol = solve_case(&disc, cfg.scheme, &case, &cfg.settings)?;
    let cons = &sol.conservation;
    let conservation = cons.max_residual() / cons.rhs_inf.max(f64::MIN_POSITIVE);
    Ok((
        h,
        sol.system.num_unknowns(),
        sol.errors,
        sol.solve.relative_residual,
        sol.solve.iterations,
        conservation,
    ))
}

/// Runs the full pipeline on every level and computes observed orders
/// between consecutive levels.
pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    manufactured_case(&cfg.case)?;
    if cfg.levels.is_empty() || cfg.levels[0] == 0 || cfg.levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "levels must be positive and strictly ascending, got {:?}",
            cfg.levels
        )));
    }
    let jobs = cfg.jobs.max(1);
    let mut raw = Vec::with_capacity(cfg.levels.len());
    for chunk in cfg.levels.chunks(jobs) {
        let results: Vec<Result<_>> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|&n| s.spawn(move || run_level(cfg, n))).collect();
            handles.into_iter().map(|h| h.join().expect("level thread panicked")).collect()
        });
        for (&n, r) in chunk.iter().zip(results) {
            raw.push((n, r.map_err(|e| e.with_context(&format!("level {n}")))?));
        }
    }
    let mut levels: Vec<LevelResult> = Vec::with_capacity(raw.len());
    for (n, (h, dofs, err, residual, iters, conservation)) in raw {
        let orders = levels.last().map(|prev: &LevelResult| {
            (
                observed_order(prev.e_u, err.e_u, prev.h, h),
                observed_order(prev.e_p, err.e_p, prev.h, h),
                observed_order(prev.e_w, err.e_w, prev.h, h),
            )
        });
        let (order_u, order_p, order_w) = orders.unwrap_or((None, None, None));
        levels.push(LevelResult {
            level: n,
            h,
            dofs,
            e_u: err.e_u,
            e_p: err.e_p,
            e_w: err.e_w,
            order_u,
            order_p,
            order_w,
            residual,
            iters,
            conservation,
            reference: err.reference,
        });
    }
    Ok(ConvergenceReport {
        scheme: cfg.scheme,
        case: cfg.case.clone(),
        mesh_family: if cfg.amplitude > 0.0 {
            format!("{}, perturbed at amplitude {}", cfg.family.label(), cfg.amplitude)
        } else {
            cfg.family.label().to_string()
        },
        amplitude: cfg.amplitude,
        seed: cfg.seed,
        settings: cfg.settings,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_follow_the_log_ratio() {
        assert_eq!(observed_order(4.0, 1.0, 0.5, 0.25), Some(2.0));
        assert_eq!(observed_order(0.0, 1.0, 0.5, 0.25), None);
    }

    #[test]
    fn rejects_bad_levels_and_cases() {
        let mut cfg = ConvergenceConfig::new(Scheme::VertexBased, "trig");
        cfg.levels = vec![2, 2];
        assert!(matches!(run_convergence(&cfg), Err(Error::InvalidArgument(_))));
        cfg.levels = vec![];
        assert!(run_convergence(&cfg).is_err());
        let cfg = ConvergenceConfig::new(Scheme::VertexBased, "nope");
        assert!(matches!(run_convergence(&cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn report_is_deterministic_across_job_counts() {
        let mut cfg = ConvergenceConfig::new(Scheme::CellBased, "trig");
        cfg.levels = vec![1, 2, 3];
        cfg.amplitude = DEFAULT_PERTURBATION;
        cfg.seed = 9;
        let a = run_convergence(&cfg).unwrap();
        cfg.jobs = 3;
        let b = run_convergence(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].split(',').nth(6).unwrap().is_empty());
        assert!(a.levels[2].order_u.is_some());
        assert!(a.mesh_family.contains("stand-in"));
    }
}
