use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::assemble::{SchemeContext, SchemeOperators};
use super::Scheme;
use crate::cochain::{reduce, Cochain, Field, ScalarFn, Side, VectorFn};
use crate::error::{Error, Result};
use crate::geometry::{central_gradient, Point, Vec3};
use crate::mesh::{EntityKind, PrimalMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadStrategy {
    /// Reduce the full load onto the momentum entities.
    Raw,
    /// Route the irrotational part through the discrete pressure gradient.
    Potential,
}

impl std::str::FromStr for LoadStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(LoadStrategy::Raw),
            "potential" => Ok(LoadStrategy::Potential),
            other => Err(Error::invalid(format!("unknown load strategy '{other}'"))),
        }
    }
}

/// External load `f`, optionally with a splitting `f = grad φ + w`.
#[derive(Clone, Default)]
pub struct LoadSpec {
    pub force: Option<VectorFn>,
    pub potential: Option<ScalarFn>,
    pub remainder: Option<VectorFn>,
}

impl std::fmt::Debug for LoadSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LoadSpec")
            .field("force", &self.force.is_some())
            .field("split", &self.has_split())
            .finish()
    }
}

impl LoadSpec {
    pub fn zero() -> Self {
        LoadSpec {
            force: Some(Arc::new(|_: &Point| Vec3::zeros())),
            potential: Some(Arc::new(|_: &Point| 0.0)),
            remainder: Some(Arc::new(|_: &Point| Vec3::zeros())),
        }
    }

    pub fn raw(force: VectorFn) -> Self {
        LoadSpec {
            force: Some(force),
            ..LoadSpec::default()
        }
    }

    pub fn split(potential: ScalarFn, remainder: VectorFn) -> Self {
        LoadSpec {
            force: None,
            potential: Some(potential),
            remainder: Some(remainder),
        }
    }

    pub fn with_force(mut self, force: VectorFn) -> Self {
        self.force = Some(force);
        self
    }

    pub fn has_split(&self) -> bool {
        self.potential.is_some() && self.remainder.is_some()
    }

    /// Largest `|grad φ + w − f|` over `samples` points of the mesh bounding
    /// box; `grad φ` uses sixth-order central differences.
    pub fn split_defect(&self, mesh: &PrimalMesh, samples: usize, seed: u64) -> Option<f64> {
        let (f, phi, w) = (self.force.as_ref()?, self.potential.as_ref()?, self.remainder.as_ref()?);
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for x in mesh.vertices() {
            lo = lo.inf(x);
            hi = hi.sup(x);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-3 * (hi - lo).amax().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = Point::from_fn(|i, _| lo[i] + (hi[i] - lo[i]) * rng.random::<f64>());
            let grad = central_gradient(&**phi, &x, h);
            worst = worst.max((grad + w(&x) - f(&x)).amax());
        }
        Some(worst)
    }
}

/// Momentum right-hand side: a dual face cochain (vertex-based) or a dual
/// edge cochain (cell-based).
pub fn discretize_load(
    ctx: &SchemeContext<'_>,
    ops: &SchemeOperators,
    load: &LoadSpec,
    strategy: LoadStrategy,
) -> Result<Cochain> {
    let (mesh, dual) = (ctx.mesh, ctx.dual);
    let kind = match ops.scheme {
        Scheme::VertexBased => EntityKind::Face,
        Scheme::CellBased => EntityKind::Edge,
    };
    match strategy {
        LoadStrategy::Raw => {
            let f = load
                .force
                .as_ref()
                .ok_or_else(|| Error::invalid("the raw load strategy needs the full load f"))?;
            reduce(mesh, dual, Field::Vector(&**f), Side::Dual, kind)
        }
        LoadStrategy::Potential => {
            let (Some(phi), Some(w)) = (load.potential.as_ref(), load.remainder.as_ref()) else {
                return Err(Error::invalid(
                    "the potential load strategy needs a splitting f = grad phi + w",
                ));
            };
            let mut rhs = reduce(mesh, dual, Field::Vector(&**w), Side::Dual, kind)?;
            let grad_part = match ops.scheme {
                Scheme::VertexBased => {
                    let rv = reduce(mesh, dual, Field::Scalar(&**phi), Side::Primal, EntityKind::Vertex)?;
                    ops.h_rho.apply(&ctx.inc.grad.apply(rv.values()))
                }
                Scheme::CellBased => {
                    let rc = reduce(mesh, dual, Field::Scalar(&**phi), Side::Dual, EntityKind::Vertex)?;
                    let mut g = ctx.inc.dual_grad().apply(rc.values());
                    g.iter_mut().for_each(|x| *x = -*x);
                    g
                }
            };
            rhs.values_mut().iter_mut().zip(grad_part).for_each(|(r, g)| *r += g);
            Ok(rhs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cochain::build_incidence;
    use crate::hodge::{HodgeDesign, MaterialField};
    use crate::mesh::{build_cartesian_hex, build_dual, BoundingBox};

    #[test]
    fn zero_load_gives_zero_rhs() {
        let m = build_cartesian_hex(2, 2, 2, BoundingBox::unit()).unwrap();
        let d = build_dual(&m).unwrap();
        let inc = build_incidence(&m);
        let mat = MaterialField::unit(&m);
        let ctx = SchemeContext { mesh: &m, dual: &d, inc: &inc, material: &mat };
        for scheme in [Scheme::VertexBased, Scheme::CellBased] {
            let ops = SchemeOperators::build(&ctx, scheme, HodgeDesign::ConsistentStabilized, 1.0).unwrap();
            for s in [LoadStrategy::Raw, LoadStrategy::Potential] {
                let r = discretize_load(&ctx, &ops, &LoadSpec::zero(), s).unwrap();
                assert_eq!(r.max_abs(), 0.0);
            }
            let raw_only = LoadSpec::raw(Arc::new(|_: &Point| Vec3::x()));
            assert!(matches!(
                discretize_load(&ctx, &ops, &raw_only, LoadStrategy::Potential),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn split_defect_detects_inconsistent_data() {
        let m = build_cartesian_hex(1, 1, 1, BoundingBox::unit()).unwrap();
        let good = LoadSpec::split(
            Arc::new(|x: &Point| (x.x * 3.0).sin() * x.y),
            Arc::new(|x: &Point| Vec3::new(0.0, x.z, 1.0)),
        )
        .with_force(Arc::new(|x: &Point| {
            Vec3::new(3.0 * (x.x * 3.0).cos() * x.y, (x.x * 3.0).sin() + x.z, 1.0)
        }));
        assert!(good.split_defect(&m, 100, 1).unwrap() <= 1e-10);
        let bad = good.clone().with_force(Arc::new(|_: &Point| Vec3::zeros()));
        assert!(bad.split_defect(&m, 100, 1).unwrap() > 1e-3);
    }
}
