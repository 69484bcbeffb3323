//! Shortest geodesic from the spot point to the vertical strike line.
//!
//! For ρ = 0 the substitution `z = ∫dx/σ` turns the metric into
//! `dz²/y² + dy²/α²`, where `K = ż/y²` is conserved along unit-speed
//! geodesics and the minimizer meets the line at its highest point
//! `y₁* = 1/K`. With `y₀ = y₁* cos β` and `y = y₁* cos φ`,
//!
//! ```text
//! |z(x₁)| = ∫₀^β y₁*² cos²φ / α(y₁* cos φ) dφ
//! d       = ∫₀^β y₁*        / α(y₁* cos φ) dφ
//! ```
//!
//! so the line search is a scalar root find in β. For ρ ≠ 0 the endpoint is
//! found by minimizing the point-to-point distance along the line.

use super::point::{solve_point, Shot};
use super::{geodesic_rhs, MetricJet, PathSample};
use crate::error::{LsvError, Result};
use crate::model::ModelSpec;
use crate::numerics::{brent, golden_section, integrate, DormandPrince, OdeOptions, QuadOptions};

/// Number of uniform arclength intervals stored on every path.
pub(crate) const PATH_INTERVALS: usize = 1024;

/// The minimizing geodesic from `(x₀, y₀)` to the line `x = x₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineGeodesic {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1_star: f64,
    /// Riemannian distance d.
    pub d: f64,
    /// Energy of the unit-time parameterization, d².
    pub energy: f64,
    /// Conserved momentum ż/y² of the unit-time parameterization.
    pub k1: f64,
    /// Unit-speed samples with `s ∈ [0, d]`.
    pub path: Vec<PathSample>,
}

impl LineGeodesic {
    pub fn end(&self) -> &PathSample {
        self.path.last().expect("path is never empty")
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        max_subdivisions: 4000,
    }
}

pub fn solve_line_geodesic(model: &ModelSpec, x1: f64) -> Result<LineGeodesic> {
    let x0 = model.x0;
    if !x1.is_finite() || x1 == x0 {
        return Err(LsvError::InvalidInput(format!(
            "strike line x1 = {x1} must differ from x0 = {x0}"
        )));
    }
    if model.rho == 0.0 {
        uncorrelated(model, x1)
    } else {
        correlated(model, x1)
    }
}

fn uncorrelated(model: &ModelSpec, x1: f64) -> Result<LineGeodesic> {
    let (x0, y0) = (model.x0, model.y0);
    let z1 = model.sigma.inverse_integral(x0, x1).abs();
    let alpha = |y: f64| model.alpha(y).value;
    let z_of = |beta: f64| -> Result<f64> {
        let ys = y0 / beta.cos();
        Ok(integrate(
            |phi| {
                let c = phi.cos();
                ys * ys * c * c / alpha(ys * c)
            },
            0.0,
            beta,
            quad_opts(),
        )?
        .value)
    };

    let mut history = Vec::new();
    let mut factor: f64 = 2.0;
    let beta_hi = loop {
        let beta = (1.0 / factor).acos();
        let z = z_of(beta)?;
        history.push((y0 * factor, z));
        if z >= z1 {
            break beta;
        }
        factor *= 2.0;
        if factor > 2f64.powi(20) {
            return Err(LsvError::RootBracket(format!(
                "no y1* with z(y1*) = {z1}; tried (y1*, z) = {history:?}"
            )));
        }
    };
    let beta = brent(|b| Ok(z_of(b)? - z1), 0.0, beta_hi, 0.0, 300)?;
    let y1_star = y0 / beta.cos();
    let d = integrate(
        |phi| y1_star / alpha(y1_star * phi.cos()),
        0.0,
        beta,
        quad_opts(),
    )?
    .value;

    let sign = (x1 - x0).signum();
    let v0 = [
        model.sigma(x0).value * sign * y0 * y0 / y1_star,
        model.alpha(y0).value * beta.sin(),
    ];
    let path = integrate_path(model, [x0, y0], v0, d)?;
    let end = path.last().expect("non-empty");
    let miss = ((end.x - x1) / (x1 - x0))
        .abs()
        .max((end.y / y1_star - 1.0).abs());
    if !(miss < 1e-6) {
        return Err(LsvError::Numerical(format!(
            "line geodesic path misses its endpoint: ({}, {}) vs ({x1}, {y1_star})",
            end.x, end.y
        )));
    }
    Ok(LineGeodesic {
        x0,
        y0,
        x1,
        y1_star,
        d,
        energy: d * d,
        k1: d / y1_star,
        path,
    })
}

/// Unit-speed geodesic samples from `p` with initial velocity `v0`.
pub(crate) fn integrate_path(
    model: &ModelSpec,
    p: [f64; 2],
    v0: [f64; 2],
    length: f64,
) -> Result<Vec<PathSample>> {
    let mut ode = DormandPrince::new(geodesic_rhs(model), OdeOptions::default());
    let samples = ode.sample(0.0, [p[0], p[1], v0[0], v0[1]], length, PATH_INTERVALS)?;
    Ok(samples
        .into_iter()
        .map(|(s, st)| PathSample {
            s,
            x: st[0],
            y: st[1],
            vx: st[2],
            vy: st[3],
        })
        .collect())
}

/// g(γ̇, e_y) at the endpoint: the derivative of the distance with respect to
/// the endpoint height.
fn end_variation(model: &ModelSpec, shot: &Shot) -> f64 {
    let j = MetricJet::new(model, shot.end[0], shot.end[1]);
    j.g[0][1] * shot.end_velocity[0] + j.g[1][1] * shot.end_velocity[1]
}

fn correlated(model: &ModelSpec, x1: f64) -> Result<LineGeodesic> {
    let (x0, y0) = (model.x0, model.y0);
    let p = [x0, y0];
    // coarse scan in log y1, warm-starting each shot from the previous one
    let mut scan: Vec<(f64, f64)> = Vec::new();
    let mut guess: Option<(f64, f64)> = None;
    let (lo, hi, n) = (-4.0, 4.0, 33);
    for i in 0..n {
        let ly = y0.ln() + lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let shot = solve_point(model, p, [x1, ly.exp()], guess)?;
        guess = Some((shot.theta, shot.length));
        scan.push((ly, shot.length));
    }
    let imin = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("scan is non-empty");
    if imin == 0 || imin == n - 1 {
        return Err(LsvError::RootBracket(format!(
            "distance along the strike line has no interior minimum in log y1 ∈ [{}, {}]",
            scan[0].0,
            scan[n - 1].0
        )));
    }
    let (a, b) = (scan[imin - 1].0, scan[imin + 1].0);

    let mut warm: Option<(f64, f64)> = None;
    let mut dist = |ly: f64| -> Result<f64> {
        let shot = solve_point(model, p, [x1, ly.exp()], warm)?;
        warm = Some((shot.theta, shot.length));
        Ok(shot.length)
    };
    let (ly_golden, _) = golden_section(&mut dist, a, b, 1e-4)?;

    // refine on the first variation, which vanishes at the minimizer
    let mut warm2 = warm;
    let mut variation = |ly: f64| -> Result<f64> {
        let shot = solve_point(model, p, [x1, ly.exp()], warm2)?;
        warm2 = Some((shot.theta, shot.length));
        Ok(end_variation(model, &shot))
    };
    let (mut ra, mut rb) = (ly_golden - 2e-4, ly_golden + 2e-4);
    let (mut fa, mut fb) = (variation(ra)?, variation(rb)?);
    let mut widen = 0;
    while fa * fb > 0.0 {
        widen += 1;
        if widen > 20 {
            return Err(LsvError::RootBracket(
                "first variation keeps its sign around the golden-section minimum".into(),
            ));
        }
        ra = (ra - (rb - ra)).max(a);
        rb = (rb + (rb - ra)).min(b);
        fa = variation(ra)?;
        fb = variation(rb)?;
    }
    let ly = brent(&mut variation, ra, rb, 1e-14, 200)?;
    let y1_star = ly.exp();
    let shot = solve_point(model, p, [x1, y1_star], warm2)?;
    let d = shot.length;
    let v0 = shot.start_velocity;
    let path = integrate_path(model, p, v0, d)?;
    Ok(LineGeodesic {
        x0,
        y0,
        x1,
        y1_star,
        d,
        energy: d * d,
        k1: d / y1_star,
        path,
    })
}
