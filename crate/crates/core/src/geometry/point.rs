//! Point-to-point geodesics by shooting on the initial direction and length.

use super::line::{integrate_path, LineGeodesic};
use super::{geodesic_rhs, MetricJet, PathSample};
use crate::error::{LsvError, Result};
use crate::model::ModelSpec;
use crate::numerics::{integrate, DormandPrince, OdeOptions, QuadOptions};

const ACCEPT_TOL: f64 = 1e-9;
const TARGET_TOL: f64 = 1e-13;

/// A solved point-to-point geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGeodesic {
    pub d: f64,
    /// Unit-speed samples with `s ∈ [0, d]`; a single sample when `p = q`.
    pub path: Vec<PathSample>,
}

/// Converged shooting solution.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Shot {
    pub theta: f64,
    /// Distance including the first-variation correction for the residual
    /// endpoint miss.
    pub length: f64,
    pub start_velocity: [f64; 2],
    pub end: [f64; 2],
    pub end_velocity: [f64; 2],
}

fn check(p: [f64; 2]) -> Result<()> {
    if p[0].is_finite() && p[1] > 0.0 && p[1].is_finite() {
        Ok(())
    } else {
        Err(LsvError::InvalidInput(format!(
            "point ({}, {}) is outside the upper half-plane",
            p[0], p[1]
        )))
    }
}

/// Unit-speed initial velocity for the direction `dir` in (x, log y).
fn unit_velocity(model: &ModelSpec, p: [f64; 2], dir: [f64; 2]) -> [f64; 2] {
    let u = [dir[0], p[1] * dir[1]];
    let j = MetricJet::new(model, p[0], p[1]);
    let n =
        (j.g[0][0] * u[0] * u[0] + 2.0 * j.g[0][1] * u[0] * u[1] + j.g[1][1] * u[1] * u[1]).sqrt();
    [u[0] / n, u[1] / n]
}

/// Metric length of the segment that is straight in (x, log y).
fn straight_length(model: &ModelSpec, p: [f64; 2], q: [f64; 2]) -> Result<f64> {
    let (dx, dl) = (q[0] - p[0], (q[1] / p[1]).ln());
    let speed = |t: f64| {
        let x = p[0] + t * dx;
        let y = p[1] * (t * dl).exp();
        let v = [dx, y * dl];
        let j = MetricJet::new(model, x, y);
        (j.g[0][0] * v[0] * v[0] + 2.0 * j.g[0][1] * v[0] * v[1] + j.g[1][1] * v[1] * v[1]).sqrt()
    };
    Ok(integrate(speed, 0.0, 1.0, QuadOptions::with_abs_tol(1e-8))?.value)
}

/// Shooting unknowns are an angle offset δ from a base direction (so the
/// base direction itself is exact) and the length.
struct Shooter<'a> {
    model: &'a ModelSpec,
    p: [f64; 2],
    q: [f64; 2],
    base: [f64; 2],
}

impl Shooter<'_> {
    fn direction(&self, delta: f64) -> [f64; 2] {
        let (sd, cd) = delta.sin_cos();
        let [c, s] = self.base;
        [c * cd - s * sd, s * cd + c * sd]
    }

    fn fire(&self, delta: f64, length: f64) -> Option<[f64; 4]> {
        if !(length > 0.0 && length.is_finite()) {
            return None;
        }
        let v = unit_velocity(self.model, self.p, self.direction(delta));
        let mut ode = DormandPrince::new(geodesic_rhs(self.model), OdeOptions::default());
        let s = ode
            .advance(0.0, [self.p[0], self.p[1], v[0], v[1]], length)
            .ok()?;
        (s.iter().all(|v| v.is_finite()) && s[1] > 0.0).then_some(s)
    }

    fn residual(&self, theta: f64, length: f64) -> Option<([f64; 2], [f64; 4])> {
        let s = self.fire(theta, length)?;
        Some(([s[0] - self.q[0], (s[1] / self.q[1]).ln()], s))
    }

    fn newton(&self, theta0: f64, length0: f64) -> Option<(f64, f64, f64, [f64; 4])> {
        let norm = |r: [f64; 2]| r[0].hypot(r[1]);
        let (mut th, mut len) = (theta0, length0);
        let (mut r, mut state) = self.residual(th, len)?;
        for _ in 0..80 {
            if norm(r) < TARGET_TOL {
                break;
            }
            let ht = 1e-7;
            let hl = 1e-7 * len.max(1e-3);
            let (rt, _) = self.residual(th + ht, len)?;
            let (rl, _) = self.residual(th, len + hl)?;
            let j = [
                [(rt[0] - r[0]) / ht, (rl[0] - r[0]) / hl],
                [(rt[1] - r[1]) / ht, (rl[1] - r[1]) / hl],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det.abs() > 0.0) || !det.is_finite() {
                break;
            }
            let dth = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
            let dlen = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
            // trust region: at most 0.3 rad in angle and half the length
            let mut step = 1f64.min(0.3 / dth.abs()).min(0.5 * len / dlen.abs());
            let mut accepted = false;
            for _ in 0..40 {
                let (nt, nl) = (th + step * dth, len + step * dlen);
                if let Some((nr, ns)) = self.residual(nt, nl) {
                    if norm(nr) < norm(r) {
                        th = nt;
                        len = nl;
                        r = nr;
                        state = ns;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (norm(r) < ACCEPT_TOL).then_some((th, len, norm(r), state))
    }
}

/// Solve the two-point problem, optionally warm-started from `(θ, L)`.
pub(crate) fn solve_point(
    model: &ModelSpec,
    p: [f64; 2],
    q: [f64; 2],
    guess: Option<(f64, f64)>,
) -> Result<Shot> {
    check(p)?;
    check(q)?;
    let (dx, dl) = (q[0] - p[0], (q[1] / p[1]).ln());
    let theta_line = dl.atan2(dx);
    let len_line = straight_length(model, p, q)?;
    let mut starts: Vec<(f64, f64)> = Vec::new();
    if let Some((theta, len)) = guess {
        starts.push((theta - theta_line, len));
    }
    for k in 0..8 {
        starts.push((k as f64 * std::f64::consts::FRAC_PI_4, len_line));
    }
    if let Some(shot) = shoot(model, p, q, &starts) {
        return Ok(shot);
    }
    continuation(model, p, q).ok_or_else(|| {
        LsvError::Convergence(format!(
            "shooting from ({}, {}) to ({}, {}) failed from every start and under continuation (straight length {len_line})",
            p[0], p[1], q[0], q[1]
        ))
    })
}

/// Newton from each `(δ, L)` start in turn; the first converged shot wins.
fn shoot(model: &ModelSpec, p: [f64; 2], q: [f64; 2], starts: &[(f64, f64)]) -> Option<Shot> {
    let (dx, dl) = (q[0] - p[0], (q[1] / p[1]).ln());
    let n = dx.hypot(dl);
    let shooter = Shooter {
        model,
        p,
        q,
        base: [dx / n, dl / n],
    };
    let theta_line = dl.atan2(dx);
    for &(delta0, len0) in starts {
        if let Some((delta, len, _, state)) = shooter.newton(delta0, len0) {
            let end = [state[0], state[1]];
            let end_velocity = [state[2], state[3]];
            let j = MetricJet::new(model, end[0], end[1]);
            let miss = [q[0] - end[0], q[1] - end[1]];
            let correction = j.g[0][0] * end_velocity[0] * miss[0]
                + j.g[0][1] * (end_velocity[0] * miss[1] + end_velocity[1] * miss[0])
                + j.g[1][1] * end_velocity[1] * miss[1];
            return Some(Shot {
                theta: theta_line + delta,
                length: len + correction,
                start_velocity: unit_velocity(model, p, shooter.direction(delta)),
                end,
                end_velocity,
            });
        }
    }
    None
}

/// Walk the target out from `p` along the straight (x, log y) segment. All
/// intermediate targets share the base direction, so the angle offset of
/// one solve is a good start for the next.
fn continuation(model: &ModelSpec, p: [f64; 2], q: [f64; 2]) -> Option<Shot> {
    let (dx, dl) = (q[0] - p[0], (q[1] / p[1]).ln());
    let target = |s: f64| [p[0] + s * dx, p[1] * (s * dl).exp()];
    let theta_line = dl.atan2(dx);
    let (mut done, mut step) = (0.0f64, 0.125f64);
    let mut last: Option<Shot> = None;
    while done < 1.0 {
        if step < 1e-4 {
            return None;
        }
        let s = (done + step).min(1.0);
        let qs = target(s);
        let starts: Vec<(f64, f64)> = match &last {
            Some(shot) => vec![(shot.theta - theta_line, shot.length * s / done)],
            None => {
                let len = straight_length(model, p, qs).ok()?;
                (0..8)
                    .map(|k| (k as f64 * std::f64::consts::FRAC_PI_4, len))
                    .collect()
            }
        };
        match shoot(model, p, qs, &starts) {
            Some(shot) => {
                last = Some(shot);
                done = s;
                step *= 1.5;
            }
            None => step *= 0.5,
        }
    }
    last
}

/// Riemannian distance between `p` and `q` together with the sampled
/// minimizing geodesic.
pub fn distance_point(model: &ModelSpec, p: [f64; 2], q: [f64; 2]) -> Result<PointGeodesic> {
    check(p)?;
    check(q)?;
    if p == q {
        return Ok(PointGeodesic {
            d: 0.0,
            path: vec![PathSample {
                s: 0.0,
                x: p[0],
                y: p[1],
                vx: 0.0,
                vy: 0.0,
            }],
        });
    }
    let shot = solve_point(model, p, q, None)?;
    let path = integrate_path(model, p, shot.start_velocity, shot.length)?;
    Ok(PointGeodesic {
        d: shot.length,
        path,
    })
}

/// Warm start for shots that begin at the spot point of `geo`.
pub(crate) fn line_guess(geo: &LineGeodesic) -> (f64, f64) {
    let p0 = &geo.path[0];
    ((p0.vy / p0.y).atan2(p0.vx), geo.d)
}

/// φ″(y₁*): second derivative of `y₁ ↦ ½d((x₀,y₀),(x₁,y₁))²` at the
/// endpoint of the line geodesic.
pub fn phi_second(model: &ModelSpec, geo: &LineGeodesic) -> Result<f64> {
    if (geo.x1 - geo.x0).abs() < 1e-6 {
        return Err(LsvError::InvalidInput(format!(
            "phi_second needs |x1 - x0| >= 1e-6, got {}",
            geo.x1 - geo.x0
        )));
    }
    let p = [geo.x0, geo.y0];
    let ys = geo.y1_star;
    let guess = Some(line_guess(geo));
    let f = |y: f64| -> Result<f64> {
        let d = solve_point(model, p, [geo.x1, y], guess)?.length;
        Ok(0.5 * d * d)
    };
    let h = 1e-3 * ys;
    let f0 = f(ys)?;
    let (fp, fm) = (f(ys + h)?, f(ys - h)?);
    let (fp2, fm2) = (f(ys + 0.5 * h)?, f(ys - 0.5 * h)?);

    let d1 = |a: f64, b: f64, step: f64| (a - b) / (2.0 * step);
    let slope = (4.0 * d1(fp2, fm2, 0.5 * h) - d1(fp, fm, h)) / 3.0;
    if !(slope.abs() < 1e-6) {
        return Err(LsvError::Numerical(format!(
            "transversality check failed: d/dy(d²/2) = {slope:e} at y1* = {ys}"
        )));
    }
    let d2 = |a: f64, b: f64, step: f64| (a - 2.0 * f0 + b) / (step * step);
    let curv = (4.0 * d2(fp2, fm2, 0.5 * h) - d2(fp, fm, h)) / 3.0;
    if !(curv > 0.0 && curv.is_finite()) {
        return Err(LsvError::Numerical(format!(
            "phi'' = {curv} is not positive at y1* = {ys}"
        )));
    }
    Ok(curv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sabr_reference, solve_line_geodesic, speed_squared};
    use crate::model::{AlphaFamily, MuFamily};

    fn hyperbolic(p: [f64; 2], q: [f64; 2]) -> f64 {
        let dx = q[0] - p[0];
        let dy = q[1] - p[1];
        (1.0 + (dx * dx + dy * dy) / (2.0 * p[1] * q[1])).acosh()
    }

    #[test]
    fn sabr_examples() {
        let m = ModelSpec::sabr(0.2, 1.0);
        let g = distance_point(&m, [0.0, 0.2], [0.2, 0.08f64.sqrt()]).unwrap();
        assert!((g.d - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-10, "{}", g.d);
        let g = distance_point(&m, [0.0, 0.2], [0.1, 0.25]).unwrap();
        assert!((g.d - 1.125f64.acosh()).abs() < 1e-10, "{}", g.d);
        assert!((g.d - 0.4949329231).abs() < 1e-9);
    }

    #[test]
    fn coincident_points() {
        let m = ModelSpec::sabr(0.2, 1.0);
        assert_eq!(distance_point(&m, [0.3, 0.4], [0.3, 0.4]).unwrap().d, 0.0);
    }

    #[test]
    fn symmetric_and_energy_conserving() {
        let mut m = ModelSpec::sabr(0.2, 0.7);
        m.alpha = AlphaFamily::Power { nu: 0.7, p: 0.6 };
        m.mu = MuFamily::Rational {
            mu0: 0.0,
            kappa: 0.2,
        };
        let (p, q) = ([0.0, 0.2], [-0.4, 0.9]);
        let a = distance_point(&m, p, q).unwrap();
        let b = distance_point(&m, q, p).unwrap();
        assert!((a.d - b.d).abs() < 1e-8);
        let e0 = speed_squared(&m, &a.path[0]);
        for s in &a.path {
            assert!((speed_squared(&m, s) / e0 - 1.0).abs() < 1e-7);
        }
        let end = a.path.last().unwrap();
        assert!((end.x - q[0]).abs() < 1e-8 && (end.y - q[1]).abs() < 1e-8);
    }

    #[test]
    fn wide_separation() {
        let m = ModelSpec::sabr(0.2, 1.0);
        for &(p, q) in &[
            ([0.0, 0.2], [3.0, 0.05]),
            ([0.0, 0.2], [-1.0, 5.0]),
            ([0.0, 0.2], [0.0, 1e6]),
            ([0.0, 1.0], [0.001, 1e-4]),
        ] {
            let d = distance_point(&m, p, q).unwrap().d;
            assert!(
                (d / hyperbolic(p, q) - 1.0).abs() < 1e-9,
                "{p:?} {q:?}: {d}"
            );
        }
    }

    #[test]
    fn strongly_bent_geodesic() {
        // none of the cold starts converge here; continuation does
        let mut m = ModelSpec::sabr(0.05, 0.2);
        m.alpha = AlphaFamily::Power { nu: 0.2, p: 0.4 };
        let (p, q) = ([0.0, 0.05], [0.198, 0.025]);
        let there = distance_point(&m, p, q).unwrap();
        let back = distance_point(&m, q, p).unwrap();
        assert!((there.d / back.d - 1.0).abs() < 1e-9);
        let end = there.path.last().unwrap();
        assert!((end.x - q[0]).abs() < 1e-8 && (end.y - q[1]).abs() < 1e-8);
        assert!(there.d < straight_length(&m, p, q).unwrap());
    }

    #[test]
    fn correlated_distance_matches_oracle() {
        let rho: f64 = -0.7;
        let rb = (1.0 - rho * rho).sqrt();
        let nu = 1.4;
        let mut m = ModelSpec::sabr(0.2, nu);
        m.rho = rho;
        m.mu = MuFamily::Prop45 { c: 0.1 };
        let map = |p: [f64; 2]| [(nu * p[0] - rho * p[1]) / rb, p[1]];
        let (p, q) = ([0.0, 0.2], [0.3, 0.35]);
        let d = distance_point(&m, p, q).unwrap().d;
        let want = hyperbolic(map(p), map(q)) / nu;
        assert!((d / want - 1.0).abs() < 1e-9, "{d} vs {want}");
    }

    #[test]
    fn phi_second_sabr() {
        let m = ModelSpec::sabr(0.2, 1.0);
        for &x1 in &[0.2, 0.04] {
            let g = solve_line_geodesic(&m, x1).unwrap();
            let ps = phi_second(&m, &g).unwrap();
            let r = sabr_reference(x1, 0.2, 1.0).unwrap();
            assert!(
                (ps / r.phi_second - 1.0).abs() < 1e-4,
                "{ps} vs {}",
                r.phi_second
            );
        }
        let g = solve_line_geodesic(&m, 0.2).unwrap();
        assert!((phi_second(&m, &g).unwrap() - 15.5807).abs() < 1e-3);
        let g = solve_line_geodesic(&m, 5e-7).unwrap();
        assert!(phi_second(&m, &g).is_err());
    }
}
