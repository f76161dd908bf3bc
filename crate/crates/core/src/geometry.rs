//! Small geometric helpers shared by the mesh and reduction code.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

pub type Vec3 = Vector3<f64>;
/// Points and vectors share one representation.
pub type Point = Vector3<f64>;

/// Area vector of the triangle `(a, b, c)`, oriented by the right-hand rule.
#[inline]
pub fn triangle_area_vector(a: &Point, b: &Point, c: &Point) -> Vec3 {
    0.5 * (b - a).cross(&(c - a))
}

/// Signed volume of the tetrahedron `(a, b, c, d)`.
#[inline]
pub fn tet_signed_volume(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

pub fn mean_point<'a>(points: impl IntoIterator<Item = &'a Point>) -> Point {
    let mut sum = Vec3::zeros();
    let mut n = 0usize;
    for p in points {
        sum += p;
        n += 1;
    }
    sum / n as f64
}

/// Outer product `a ⊗ b`.
#[inline]
pub fn outer(a: &Vec3, b: &Vec3) -> Matrix3<f64> {
    a * b.transpose()
}

/// Sixth-order central difference gradient of `phi` at `x` with step `h`.
pub fn central_gradient(phi: &dyn Fn(&Point) -> f64, x: &Point, h: f64) -> Vec3 {
    const W: [(f64, f64); 3] = [(1.0, 45.0), (2.0, -9.0), (3.0, 1.0)];
    Vec3::from_fn(|i, _| {
        let mut e = Vec3::zeros();
        e[i] = h;
        W.iter().map(|&(k, c)| c * (phi(&(x + k * e)) - phi(&(x - k * e)))).sum::<f64>() / (60.0 * h)
    })
}

/// Minimum-norm solution of `Σ_i rows[i] ⊗ x_i = target` for the unknown
/// vectors `x_i`.
///
/// Written column by column this is `Rᵀ X = target` with `R` the stacked rows,
/// solved as `X = R (RᵀR)⁺ target`. Directions missing from the span of the
/// rows are dropped.
pub fn min_norm_outer_solve(rows: &[Vec3], target: &Matrix3<f64>) -> Vec<Vec3> {
    let mut gram = Matrix3::zeros();
    for r in rows {
        gram += outer(r, r);
    }
    let eig = SymmetricEigen::new(gram);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pinv = Matrix3::zeros();
    for k in 0..3 {
        let lambda = eig.eigenvalues[k];
        if lambda > 1e-12 * scale {
            let v = eig.eigenvectors.column(k).into_owned();
            pinv += outer(&v, &v) / lambda;
        }
    }
    let coeffs = pinv * target;
    rows.iter().map(|r| coeffs.transpose() * r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_tet_volume() {
        let o = Point::zeros();
        let v = tet_signed_volume(&o, &Vec3::x(), &Vec3::y(), &Vec3::z());
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn min_norm_solve_reproduces_target() {
        let rows = vec![
            Vec3::new(1.0, 0.1, 0.0),
            Vec3::new(0.0, 1.0, 0.2),
            Vec3::new(0.3, 0.0, 1.0),
            Vec3::new(-1.0, 0.5, 0.5),
        ];
        let target = Matrix3::new(1.0, 2.0, 0.0, -1.0, 0.5, 0.3, 0.2, 0.0, 4.0);
        let x = min_norm_outer_solve(&rows, &target);
        let mut back = Matrix3::zeros();
        for (r, xi) in rows.iter().zip(&x) {
            back += outer(r, xi);
        }
        assert!((back - target).norm() < 1e-12);
    }
}
