//! Leading-order heat kernel ingredients.
//!
//! The generator is `½Δ + 𝒜` with drift field
//! `𝒜ⁱ = bⁱ − ½|g|^{−1/2} ∂_j(√|g| g^{ij})`, which for this model is
//!
//! ```text
//! 𝒜ˣ = −½σ²y² − ½σσ′y²
//! 𝒜ʸ = μ − ½(αα′ − α²/y)
//! ```
//!
//! for every ρ. The work term is `A = ∫⟨𝒜, γ̇⟩` along the minimizing
//! geodesic and the kernel is `(2πt)⁻¹ u₀ e^{−d²/2t + A}`.

use crate::error::{LsvError, Result};
use crate::geometry::{
    distance_point, jacobi_u0, metric_tensor, phi_second, LineGeodesic, PathSample,
};
use crate::model::ModelSpec;
use crate::numerics::{integrate, QuadOptions};

/// Kernel factors at the endpoint `(x₁, y₁*)` of a line geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelFactors {
    pub u0: f64,
    /// Work term A.
    pub work: f64,
    /// 𝒫 = e^A.
    pub p: f64,
    /// ψ = y₁*² 𝒫 u₀ √|g|(x₁, y₁*).
    pub psi: f64,
    /// φ = d²/2.
    pub phi: f64,
    pub phi_second: f64,
}

/// Drift field 𝒜 at (x, y).
pub fn drift_field(model: &ModelSpec, x: f64, y: f64) -> [f64; 2] {
    let s = model.sigma(x);
    let a = model.alpha(y);
    let (mu, _) = model.mu(y);
    [
        -0.5 * s.value * s.value * y * y - 0.5 * s.value * s.d1 * y * y,
        mu - 0.5 * (a.value * a.d1 - a.value * a.value / y),
    ]
}

/// ∫⟨𝒜, γ̇⟩ ds along a sampled path: trapezoid on all samples and on every
/// other sample, combined by one Richardson step.
pub fn work_term_along_path(model: &ModelSpec, path: &[PathSample]) -> Result<f64> {
    if path.len() < 3 || !(path.len() - 1).is_multiple_of(2) {
        return Err(LsvError::InvalidInput(format!(
            "work term needs an even number of path intervals, got {}",
            path.len().saturating_sub(1)
        )));
    }
    let f: Vec<f64> = path
        .iter()
        .map(|p| {
            let g = metric_tensor(model, p.x, p.y)?;
            Ok(g.inner(drift_field(model, p.x, p.y), [p.vx, p.vy]))
        })
        .collect::<Result<_>>()?;
    let trap = |stride: usize| {
        let mut acc = 0.0;
        let mut i = 0;
        while i + stride < f.len() {
            acc += 0.5 * (f[i] + f[i + stride]) * (path[i + stride].s - path[i].s);
            i += stride;
        }
        acc
    };
    Ok((4.0 * trap(1) - trap(2)) / 3.0)
}

fn monotone(geo: &LineGeodesic) -> bool {
    let sign = (geo.x1 - geo.x0).signum();
    geo.path
        .iter()
        .all(|p| p.vx * sign >= -1e-12 && p.vy >= -1e-12)
}

/// Work term A along the line geodesic. For ρ = 0 and a monotone path the
/// integral separates:
/// `A = −½(x₁−x₀) − ½ln(σ(x₁)/σ(x₀)) + ∫_{y₀}^{y₁*} α⁻²[μ − ½(α′α − α²/y)] dy`.
pub fn work_term_a(model: &ModelSpec, geo: &LineGeodesic) -> Result<f64> {
    if model.rho == 0.0 && monotone(geo) {
        let x_part = -0.5 * (geo.x1 - geo.x0)
            - 0.5 * (model.sigma(geo.x1).value / model.sigma(geo.x0).value).ln();
        let y_part = integrate(
            |y| {
                let a = model.alpha(y);
                let (mu, _) = model.mu(y);
                (mu - 0.5 * (a.d1 * a.value - a.value * a.value / y)) / (a.value * a.value)
            },
            geo.y0,
            geo.y1_star,
            QuadOptions::with_abs_tol(1e-13),
        )?
        .value;
        return Ok(x_part + y_part);
    }
    work_term_along_path(model, &geo.path)
}

pub fn kernel_factors(model: &ModelSpec, geo: &LineGeodesic) -> Result<KernelFactors> {
    let u0 = jacobi_u0(model, &geo.path)?;
    let work = work_term_a(model, geo)?;
    let p = work.exp();
    let sqrt_g = metric_tensor(model, geo.x1, geo.y1_star)?.sqrt_det();
    let psi = geo.y1_star * geo.y1_star * p * u0 * sqrt_g;
    let phi = 0.5 * geo.d * geo.d;
    let phi_second = phi_second(model, geo)?;
    if !(psi > 0.0 && phi > 0.0) {
        return Err(LsvError::Numerical(format!(
            "kernel factors out of range: psi = {psi}, phi = {phi}"
        )));
    }
    Ok(KernelFactors {
        u0,
        work,
        p,
        psi,
        phi,
        phi_second,
    })
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(LsvError::InvalidInput(format!("t must be > 0, got {t}")))
    }
}

/// Leading-order transition density of (X, Y) from `p` to `q` with respect to
/// Lebesgue measure: `(2πt)⁻¹ u₀ e^{−d²/2t + A} √|g|(q)`.
pub fn bellaiche_density(model: &ModelSpec, p: [f64; 2], q: [f64; 2], t: f64) -> Result<f64> {
    check_t(t)?;
    if p == q {
        return Err(LsvError::InvalidInput(
            "density needs distinct points".into(),
        ));
    }
    let geo = distance_point(model, p, q)?;
    let u0 = jacobi_u0(model, &geo.path)?;
    let work = work_term_along_path(model, &geo.path)?;
    let sqrt_g = metric_tensor(model, q[0], q[1])?.sqrt_det();
    Ok(u0 * (-0.5 * geo.d * geo.d / t + work).exp() * sqrt_g / (2.0 * std::f64::consts::PI * t))
}

/// Exact heat kernel of ½Δ on the hyperbolic plane at distance `d`:
/// `√2 e^{−t/8} (2πt)^{−3/2} ∫_d^∞ r e^{−r²/2t} (cosh r − cosh d)^{−1/2} dr`.
pub fn mckean_kernel(d: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    if !(d >= 0.0 && d.is_finite()) {
        return Err(LsvError::InvalidInput(format!("d must be >= 0, got {d}")));
    }
    // r = d + u², cosh r − cosh d = 2 sinh(d + u²/2) sinh(u²/2), and the
    // factor e^{−d²/2t} is pulled out
    let f = |u: f64| {
        if u == 0.0 {
            return if d > 0.0 {
                2.0 * d / d.sinh().sqrt()
            } else {
                0.0
            };
        }
        let v = u * u;
        let r = d + v;
        let den = (2.0 * (d + 0.5 * v).sinh() * (0.5 * v).sinh()).sqrt();
        2.0 * u * r * (-(2.0 * d * v + v * v) / (2.0 * t)).exp() / den
    };
    let u_max = (-d + (d * d + 80.0 * t).sqrt()).sqrt();
    let integral = integrate(
        f,
        0.0,
        u_max,
        QuadOptions {
            abs_tol: 1e-300,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
        },
    )?
    .value;
    let pi = std::f64::consts::PI;
    Ok(2f64.sqrt() * (-t / 8.0).exp() / (2.0 * pi * t).powf(1.5)
        * (-d * d / (2.0 * t)).exp()
        * integral)
}

/// Van Vleck–Morette determinant
/// `Δ = g(p)^{−1/2} det(−∂²φ/∂pᵢ∂qⱼ) g(q)^{−1/2}`, φ = ½d², from central
/// differences (step 1e−4) in (x, log y).
pub fn vvm_determinant(model: &ModelSpec, p: [f64; 2], q: [f64; 2]) -> Result<f64> {
    if p == q {
        return Err(LsvError::InvalidInput("VVM needs distinct points".into()));
    }
    let to_xy = |c: [f64; 2]| [c[0], c[1].exp()];
    let dist = |a: [f64; 2], b: [f64; 2]| Ok(distance_point(model, to_xy(a), to_xy(b))?.d);
    let sqrt_g =
        |c: [f64; 2]| -> Result<f64> { Ok(metric_tensor(model, c[0], c[1])?.sqrt_det() * c[1]) };
    vvm_from_distance(
        dist,
        [p[0], p[1].ln()],
        [q[0], q[1].ln()],
        sqrt_g(p)?,
        sqrt_g(q)?,
        1e-4,
    )
}

/// Δ for an arbitrary distance function given in the coordinates of `p` and
/// `q`, with the volume densities `√|g|` in the same coordinates.
pub fn vvm_from_distance<F>(
    mut dist: F,
    p: [f64; 2],
    q: [f64; 2],
    sqrt_g_p: f64,
    sqrt_g_q: f64,
    h: f64,
) -> Result<f64>
where
    F: FnMut([f64; 2], [f64; 2]) -> Result<f64>,
{
    let mut phi = |a: [f64; 2], b: [f64; 2]| -> Result<f64> {
        let d = dist(a, b)?;
        Ok(0.5 * d * d)
    };
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let shift = |c: [f64; 2], k: usize, s: f64| {
                let mut c = c;
                c[k] += s;
                c
            };
            let pp = phi(shift(p, i, h), shift(q, j, h))?;
            let pm = phi(shift(p, i, h), shift(q, j, -h))?;
            let mp = phi(shift(p, i, -h), shift(q, j, h))?;
            let mm = phi(shift(p, i, -h), shift(q, j, -h))?;
            m[i][j] = -(pp - pm - mp + mm) / (4.0 * h * h);
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let delta = det / (sqrt_g_p * sqrt_g_q);
    if !delta.is_finite() {
        return Err(LsvError::Numerical(format!(
            "non-finite VVM determinant from mixed Hessian {m:?}"
        )));
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sabr_reference, solve_line_geodesic};
    use crate::model::{AlphaFamily, MuFamily, SigmaFamily};

    #[test]
    fn sabr_factors() {
        let m = ModelSpec::sabr(0.2, 1.0);
        let g = solve_line_geodesic(&m, 0.2).unwrap();
        let k = kernel_factors(&m, &g).unwrap();
        assert!((k.work + 0.1).abs() < 1e-14);
        let want_psi = (-0.1f64).exp() * (g.d / 1.0f64).sqrt();
        assert!((k.psi / want_psi - 1.0).abs() < 1e-10);
        assert!((k.psi - 0.849473).abs() < 2e-5, "{}", k.psi);
        assert!((k.phi - 0.388410).abs() < 1e-6);
        let r = sabr_reference(0.2, 0.2, 1.0).unwrap();
        assert!((k.phi_second / r.phi_second - 1.0).abs() < 1e-4);
    }

    #[test]
    fn work_term_paths_agree() {
        let mut m = ModelSpec::sabr(0.2, 1.0);
        m.mu = MuFamily::Rational {
            mu0: 0.0,
            kappa: 0.5,
        };
        for &x1 in &[0.05, 0.12, -0.2] {
            let g = solve_line_geodesic(&m, x1).unwrap();
            let fast = work_term_a(&m, &g).unwrap();
            let path = work_term_along_path(&m, &g.path).unwrap();
            assert!((fast - path).abs() < 1e-8, "{x1}: {fast} vs {path}");
        }
        let mut m = ModelSpec::sabr(0.3, 0.8);
        m.sigma = SigmaFamily::Logistic {
            low: 0.7,
            high: 1.3,
            steepness: 2.0,
            center: 0.0,
        };
        m.alpha = AlphaFamily::Power { nu: 0.8, p: 0.8 };
        let g = solve_line_geodesic(&m, 0.25).unwrap();
        let fast = work_term_a(&m, &g).unwrap();
        let path = work_term_along_path(&m, &g.path).unwrap();
        assert!((fast - path).abs() < 1e-8, "{fast} vs {path}");
    }

    #[test]
    fn bellaiche_matches_hand_formula() {
        let m = ModelSpec::sabr(0.2, 1.0);
        let (p, q) = ([0.0, 0.2], [0.1, 0.25]);
        let t = 0.05;
        let d = 1.125f64.acosh();
        let hand = (d.sinh() / d).powf(-0.5) * (-d * d / (2.0 * t) - 0.05).exp()
            / (0.25 * 0.25)
            / (2.0 * std::f64::consts::PI * t);
        let v = bellaiche_density(&m, p, q, t).unwrap();
        assert!((v / hand - 1.0).abs() < 1e-10, "{v} vs {hand}");
        assert!(bellaiche_density(&m, p, p, t).is_err());
    }

    #[test]
    fn bellaiche_exponent() {
        let m = ModelSpec::sabr(0.2, 1.0);
        let (p, q) = ([0.0, 0.2], [0.1, 0.25]);
        let d = 1.125f64.acosh();
        let lim = |t: f64| -t * bellaiche_density(&m, p, q, t).unwrap().ln();
        let (a, b) = (lim(1e-2), lim(1e-3));
        // −t log p = d²/2 + t log t + O(t); extrapolate the t log t term away
        let fix = |t: f64, v: f64| v - t * t.ln();
        let (a, b) = (fix(1e-2, a), fix(1e-3, b));
        let extrap = b - (a - b) / 9.0;
        assert!((extrap / (0.5 * d * d) - 1.0).abs() < 0.01, "{extrap}");
    }

    #[test]
    fn mckean_against_leading_order() {
        let (d, t) = (0.5f64, 0.01f64);
        let lead = (d.sinh() / d).powf(-0.5) * (-d * d / (2.0 * t)).exp()
            / (2.0 * std::f64::consts::PI * t);
        let exact = mckean_kernel(d, t).unwrap();
        assert!((exact / lead - 1.0).abs() < 0.02, "{}", exact / lead);
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let v = mckean_kernel(0.1 * i as f64, 0.05).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert_eq!(mckean_kernel(50.0, 0.01).unwrap(), 0.0);
        assert!(mckean_kernel(-1.0, 0.01).is_err());
    }

    #[test]
    fn vvm_flat_and_sabr() {
        let flat = vvm_from_distance(
            |a, b| Ok((a[0] - b[0]).hypot(a[1] - b[1])),
            [0.0, 1.0],
            [0.7, 1.4],
            1.0,
            1.0,
            1e-4,
        )
        .unwrap();
        assert!((flat - 1.0).abs() < 1e-6);
        let m = ModelSpec::sabr(0.2, 1.0);
        let (p, q) = ([0.0, 0.2], [0.2, 0.25]);
        let delta = vvm_determinant(&m, p, q).unwrap();
        let d = distance_point(&m, p, q).unwrap().d;
        assert!((delta / (d / d.sinh()) - 1.0).abs() < 1e-3, "{delta}");
    }
}
