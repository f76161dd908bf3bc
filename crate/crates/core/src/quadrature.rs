//! Fixed quadrature rules: 4-point Gauss–Legendre on segments, the 6-point
//! degree-4 symmetric rule on triangles and a collapsed tensor Gauss rule on
//! tetrahedra (exact up to degree 5).

use crate::geometry::{Point, Vec3};

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub const GAUSS4: [(f64, f64); 4] = [
    (0.069_431_844_202_973_71, 0.173_927_422_568_726_93),
    (0.330_009_478_207_571_87, 0.326_072_577_431_273_07),
    (0.669_990_521_792_428_1, 0.326_072_577_431_273_07),
    (0.930_568_155_797_026_3, 0.173_927_422_568_726_93),
];

const TRI_A: f64 = 0.445_948_490_915_965;
const TRI_B: f64 = 0.091_576_213_509_771;
const TRI_WA: f64 = 0.223_381_589_678_011;
const TRI_WB: f64 = 0.109_951_743_655_322;

/// Barycentric nodes and weights (summing to one) of the degree-4 triangle rule.
pub const TRI6: [([f64; 3], f64); 6] = [
    ([TRI_A, TRI_A, 1.0 - 2.0 * TRI_A], TRI_WA),
    ([TRI_A, 1.0 - 2.0 * TRI_A, TRI_A], TRI_WA),
    ([1.0 - 2.0 * TRI_A, TRI_A, TRI_A], TRI_WA),
    ([TRI_B, TRI_B, 1.0 - 2.0 * TRI_B], TRI_WB),
    ([TRI_B, 1.0 - 2.0 * TRI_B, TRI_B], TRI_WB),
    ([1.0 - 2.0 * TRI_B, TRI_B, TRI_B], TRI_WB),
];

/// `∫_a^b g(x)·t dl` along the straight segment from `a` to `b`.
pub fn segment_circulation(a: &Point, b: &Point, g: &dyn Fn(&Point) -> Vec3) -> f64 {
    let d = b - a;
    GAUSS4
        .iter()
        .map(|&(s, w)| w * g(&(a + s * d)).dot(&d))
        .sum()
}

/// Flux of `g` through the triangle `(a, b, c)` oriented by the right-hand rule.
pub fn triangle_flux(a: &Point, b: &Point, c: &Point, g: &dyn Fn(&Point) -> Vec3) -> f64 {
    let area = crate::geometry::triangle_area_vector(a, b, c);
    TRI6.iter()
        .map(|&(l, w)| {
            let x = l[0] * a + l[1] * b + l[2] * c;
            w * g(&x).dot(&area)
        })
        .sum()
}

/// Signed integral of a scalar over the tetrahedron `(a, b, c, d)`; the sign
/// follows the orientation of the vertex ordering.
pub fn tet_integral(a: &Point, b: &Point, c: &Point, d: &Point, g: &dyn Fn(&Point) -> f64) -> f64 {
    let vol = crate::geometry::tet_signed_volume(a, b, c, d);
    let (e1, e2, e3) = (b - a, c - a, d - a);
    let mut acc = 0.0;
    for &(u, wu) in &GAUSS4 {
        for &(v, wv) in &GAUSS4 {
            for &(t, wt) in &GAUSS4 {
                let x = u;
                let y = v * (1.0 - u);
                let z = t * (1.0 - u) * (1.0 - v);
                let jac = 6.0 * (1.0 - u) * (1.0 - u) * (1.0 - v);
                acc += wu * wv * wt * jac * g(&(a + x * e1 + y * e2 + z * e3));
            }
        }
    }
    acc * vol
}
