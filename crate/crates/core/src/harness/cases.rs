use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cochain::{ScalarFn, VectorFn};
use crate::error::{Error, Result};
use crate::geometry::{central_gradient, Point, Vec3};
use crate::stokes::{BoundaryData, LoadSpec};

pub const CASE_NAMES: [&str; 3] = ["trig", "poly", "gradient-only"];

/// Closed-form Stokes data with `curl ω + grad p = f`, `ω = curl u`,
/// `div u = 0` and a zero-mean pressure on the unit cube.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub velocity: VectorFn,
    pub pressure: ScalarFn,
    pub vorticity: VectorFn,
    pub force: VectorFn,
    /// Splitting `f = grad φ + w`.
    pub potential: ScalarFn,
    pub remainder: VectorFn,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase").field("name", &self.name).finish()
    }
}

/// `∂^(i,j,k) g` for `g = sin(πx) sin(πy) sin(πz)`.
fn dg(x: &Point, order: [u32; 3]) -> f64 {
    (0..3)
        .map(|d| PI.powi(order[d] as i32) * (PI * x[d] + order[d] as f64 * PI / 2.0).sin())
        .product()
}

fn trig_velocity(x: &Point) -> Vec3 {
    let (gx, gy, gz) = (dg(x, [1, 0, 0]), dg(x, [0, 1, 0]), dg(x, [0, 0, 1]));
    Vec3::new(gy - gz, gz - gx, gx - gy)
}

/// `curl curl Ψ = grad div Ψ − ΔΨ` with `ΔΨ = −3π² g (1, 1, 1)`.
fn trig_vorticity(x: &Point) -> Vec3 {
    let g = dg(x, [0, 0, 0]);
    let (gxy, gxz, gyz) = (dg(x, [1, 1, 0]), dg(x, [1, 0, 1]), dg(x, [0, 1, 1]));
    let s = 2.0 * PI * PI * g;
    Vec3::new(s + gxy + gxz, s + gxy + gyz, s + gxz + gyz)
}

fn trig_pressure(x: &Point) -> f64 {
    dg(x, [0, 0, 0]) - 8.0 / PI.powi(3)
}

fn trig_pressure_gradient(x: &Point) -> Vec3 {
    Vec3::new(dg(x, [1, 0, 0]), dg(x, [0, 1, 0]), dg(x, [0, 0, 1]))
}

/// Builds one of [`CASE_NAMES`].
pub fn manufactured_case(name: &str) -> Result<ManufacturedCase> {
    let zero_v: VectorFn = Arc::new(|_: &Point| Vec3::zeros());
    let case = match name {
        "trig" => {
            // curl ω = 3π² u because grad div Ψ is curl-free
            let w: VectorFn = Arc::new(|x: &Point| 3.0 * PI * PI * trig_velocity(x));
            ManufacturedCase {
                name: name.into(),
                velocity: Arc::new(trig_velocity),
                pressure: Arc::new(trig_pressure),
                vorticity: Arc::new(trig_vorticity),
                force: Arc::new(|x: &Point| 3.0 * PI * PI * trig_velocity(x) + trig_pressure_gradient(x)),
                potential: Arc::new(trig_pressure),
                remainder: w,
            }
        }
        "poly" => {
            let p: ScalarFn = Arc::new(|x: &Point| 2.0 * x.x - x.y + 0.5 * x.z - 0.75);
            ManufacturedCase {
                name: name.into(),
                velocity: Arc::new(|_: &Point| Vec3::new(1.0, -0.5, 0.25)),
                pressure: p.clone(),
                vorticity: zero_v.clone(),
                force: Arc::new(|_: &Point| Vec3::new(2.0, -1.0, 0.5)),
                potential: p,
                remainder: zero_v,
            }
        }
        "gradient-only" => {
            let p: ScalarFn = Arc::new(|x: &Point| 0.5 * x.norm_squared() - 0.5);
            ManufacturedCase {
                name: name.into(),
                velocity: zero_v.clone(),
                pressure: p.clone(),
                vorticity: zero_v.clone(),
                force: Arc::new(|x: &Point| *x),
                potential: p,
                remainder: zero_v,
            }
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown manufactured case '{other}' (expected one of {})",
                CASE_NAMES.join(", ")
            )))
        }
    };
    Ok(case)
}

/// Largest pointwise defects of a case, measured with finite differences.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CaseDefects {
    pub divergence: f64,
    pub vorticity: f64,
    pub momentum: f64,
    pub split: f64,
}

impl CaseDefects {
    pub fn max(&self) -> f64 {
        self.divergence.max(self.vorticity).max(self.momentum).max(self.split)
    }
}

fn component(f: &VectorFn, i: usize) -> impl Fn(&Point) -> f64 + '_ {
    move |x: &Point| f(x)[i]
}

fn fd_curl(f: &VectorFn, x: &Point, h: f64) -> Vec3 {
    let j: Vec<Vec3> = (0..3).map(|i| central_gradient(&component(f, i), x, h)).collect();
    Vec3::new(j[2].y - j[1].z, j[0].z - j[2].x, j[1].x - j[0].y)
}

impl ManufacturedCase {
    pub fn load(&self) -> LoadSpec {
        LoadSpec::split(self.potential.clone(), self.remainder.clone()).with_force(self.force.clone())
    }

    pub fn boundary(&self) -> BoundaryData {
        BoundaryData::from_fields(self.velocity.clone(), self.vorticity.clone())
    }

    /// Checks the defining identities at `samples` points of the unit cube
    /// with sixth-order central differences.
    pub fn defects(&self, samples: usize, seed: u64) -> CaseDefects {
        let h = 5e-3;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = CaseDefects { divergence: 0.0, vorticity: 0.0, momentum: 0.0, split: 0.0 };
        for _ in 0..samples {
            let x = Point::from_fn(|_, _| rng.random::<f64>());
            let div: f64 = (0..3).map(|i| central_gradient(&component(&self.velocity, i), &x, h)[i]).sum();
            let curl_u = fd_curl(&self.velocity, &x, h);
            let curl_w = fd_curl(&self.vorticity, &x, h);
            let grad_p = central_gradient(&*self.pressure, &x, h);
            let grad_phi = central_gradient(&*self.potential, &x, h);
            let f = (self.force)(&x);
            d.divergence = d.divergence.max(div.abs());
            d.vorticity = d.vorticity.max((curl_u - (self.vorticity)(&x)).amax());
            d.momentum = d.momentum.max((f - curl_w - grad_p).amax());
            d.split = d.split.max((grad_phi + (self.remainder)(&x) - f).amax());
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GAUSS4;

    #[test]
    fn all_cases_satisfy_their_identities() {
        for name in CASE_NAMES {
            let c = manufactured_case(name).unwrap();
            let d = c.defects(100, 11);
            assert!(d.max() <= 1e-10, "{name}: {d:?}");
        }
    }

    #[test]
    fn unknown_case_is_rejected() {
        assert!(matches!(manufactured_case("kovasznay"), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn gradient_only_has_zero_velocity() {
        let c = manufactured_case("gradient-only").unwrap();
        assert_eq!((c.velocity)(&Point::new(0.3, 0.2, 0.9)), Vec3::zeros());
    }

    /// Tensor Gauss rule on 8 subintervals per axis against the hand
    /// integral ∫ g = (∫₀¹ sin πt dt)³ = 8/π³.
    #[test]
    fn trig_pressure_has_zero_mean() {
        let nodes: Vec<(f64, f64)> = (0..8)
            .flat_map(|s| GAUSS4.iter().map(move |&(t, w)| ((s as f64 + t) / 8.0, w / 8.0)))
            .collect();
        let (mut int_g, mut int_p) = (0.0, 0.0);
        for &(x, wx) in &nodes {
            for &(y, wy) in &nodes {
                for &(z, wz) in &nodes {
                    let pt = Point::new(x, y, z);
                    int_g += wx * wy * wz * dg(&pt, [0, 0, 0]);
                    int_p += wx * wy * wz * trig_pressure(&pt);
                }
            }
        }
        assert!((int_g - 8.0 / PI.powi(3)).abs() <= 1e-12);
        assert!(int_p.abs() <= 1e-12, "{int_p}");
    }
}
