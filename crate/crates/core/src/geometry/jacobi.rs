//! Heat-kernel prefactor u₀ from the scalar Jacobi equation.

use super::{gauss_curvature, PathSample};
use crate::error::{LsvError, Result};
use crate::model::ModelSpec;

/// u₀ = (J(d)/d)^{−1/2} where `J″ = −κJ`, `J(0) = 0`, `J′(0) = 1` along the
/// unit-speed `path`.
pub fn jacobi_u0(model: &ModelSpec, path: &[PathSample]) -> Result<f64> {
    jacobi_u0_with(path, |x, y| {
        gauss_curvature(model, x, y).unwrap_or(f64::NAN)
    })
}

/// As [`jacobi_u0`] with an arbitrary curvature function κ(x, y).
pub fn jacobi_u0_with<K: Fn(f64, f64) -> f64>(path: &[PathSample], kappa: K) -> Result<f64> {
    if path.len() < 2 {
        return Err(LsvError::InvalidInput(
            "Jacobi integration needs at least two path samples".into(),
        ));
    }
    let d = path.last().expect("len >= 2").s - path[0].s;
    if !(d > 0.0) {
        return Err(LsvError::InvalidInput(format!(
            "path length {d} is not positive"
        )));
    }
    // RK4 on (J, J′), curvature at midpoints from cubic Hermite interpolation
    let (mut j, mut dj) = (0.0f64, 1.0f64);
    let mut k0 = kappa(path[0].x, path[0].y);
    for w in path.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let h = b.s - a.s;
        let xm = 0.5 * (a.x + b.x) + h * (a.vx - b.vx) / 8.0;
        let ym = 0.5 * (a.y + b.y) + h * (a.vy - b.vy) / 8.0;
        let km = kappa(xm, ym);
        let k1 = kappa(b.x, b.y);
        let f = |k: f64, j: f64| -k * j;
        let (a1, b1) = (dj, f(k0, j));
        let (a2, b2) = (dj + 0.5 * h * b1, f(km, j + 0.5 * h * a1));
        let (a3, b3) = (dj + 0.5 * h * b2, f(km, j + 0.5 * h * a2));
        let (a4, b4) = (dj + h * b3, f(k1, j + h * a3));
        j += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        dj += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        k0 = k1;
    }
    if !(j > 0.0 && j.is_finite()) {
        return Err(LsvError::Numerical(format!(
            "Jacobi field J(d) = {j} is not positive"
        )));
    }
    Ok((j / d).powf(-0.5))
}
