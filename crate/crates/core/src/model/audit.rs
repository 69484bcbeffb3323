//! Numerical audit of the standing model assumptions on a finite grid.

use std::fmt;

use super::gauge::{gauge_potential, mu0_estimate, potential_limits};
use super::ModelSpec;
use crate::geometry::gauss_curvature;

/// Audit grid: uniform in x, log-uniform in y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl Default for AuditGrid {
    fn default() -> Self {
        Self {
            x_min: -1.0,
            x_max: 1.0,
            nx: 41,
            y_min: 1e-4,
            y_max: 1e4,
            ny: 161,
        }
    }
}

impl AuditGrid {
    pub fn xs(&self) -> Vec<f64> {
        if self.nx <= 1 {
            return vec![self.x_min];
        }
        (0..self.nx)
            .map(|i| self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64)
            .collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        if self.ny <= 1 {
            return vec![self.y_min];
        }
        let (a, b) = (self.y_min.ln(), self.y_max.ln());
        (0..self.ny)
            .map(|i| (a + (b - a) * i as f64 / (self.ny - 1) as f64).exp())
            .collect()
    }
}

impl fmt::Display for AuditGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "x[{},{}]x{} y[{:e},{:e}]x{}(log)",
            self.x_min, self.x_max, self.nx, self.y_min, self.y_max, self.ny
        )
    }
}

/// One audited condition.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    /// Named values supporting the verdict (worst point, fitted exponent, ...).
    pub witness: Vec<(String, f64)>,
    pub grid: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
    pub warnings: Vec<String>,
}

impl AuditReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const GROWTH_TOL: f64 = 1e-3;

fn check(name: &str, passed: bool, witness: Vec<(&str, f64)>, grid: String) -> AuditCheck {
    AuditCheck {
        name: name.into(),
        passed,
        witness: witness.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        grid,
    }
}

fn slope(model: &ModelSpec, y1: f64, y2: f64) -> f64 {
    (model.alpha(y2).value.ln() - model.alpha(y1).value.ln()) / (y2.ln() - y1.ln())
}

/// Audit `model` on `grid`. Failures are recorded, never returned as errors.
pub fn audit_assumptions(model: &ModelSpec, grid: &AuditGrid) -> AuditReport {
    let xs = grid.xs();
    let ys = grid.ys();
    let gs = grid.to_string();
    let mut report = AuditReport::default();

    // negative curvature
    let mut worst = (f64::NEG_INFINITY, f64::NAN, f64::NAN);
    for &x in &xs {
        for &y in &ys {
            let k = gauss_curvature(model, x, y).unwrap_or(f64::NAN);
            if !(k <= worst.0) {
                worst = (k, x, y);
            }
        }
    }
    report.checks.push(check(
        "negative-curvature",
        worst.0 <= 0.0,
        vec![("kappa_max", worst.0), ("x", worst.1), ("y", worst.2)],
        gs.clone(),
    ));

    // σ bounds and skew condition σ² + σ′² − 2σσ″ > 0
    let (lo, hi) = model.sigma.bounds();
    let mut s_min = (f64::INFINITY, f64::NAN);
    let mut s_max = (f64::NEG_INFINITY, f64::NAN);
    let mut skew_min = (f64::INFINITY, f64::NAN);
    for &x in &xs {
        let s = model.sigma(x);
        if s.value < s_min.0 {
            s_min = (s.value, x);
        }
        if s.value > s_max.0 {
            s_max = (s.value, x);
        }
        let skew = s.value * s.value + s.d1 * s.d1 - 2.0 * s.value * s.d2;
        if !(skew >= skew_min.0) {
            skew_min = (skew, x);
        }
    }
    report.checks.push(check(
        "sigma-bounds",
        lo > 0.0 && hi.is_finite() && s_min.0 >= lo && s_max.0 <= hi,
        vec![
            ("sigma_min", s_min.0),
            ("x_at_min", s_min.1),
            ("sigma_max", s_max.0),
            ("x_at_max", s_max.1),
        ],
        gs.clone(),
    ));
    report.checks.push(check(
        "skew-condition",
        skew_min.0 > 0.0,
        vec![("min_value", skew_min.0), ("x", skew_min.1)],
        gs.clone(),
    ));

    // −2α + yα′ ≤ 0 and α increasing
    let mut conv = (f64::NEG_INFINITY, f64::NAN);
    let mut slope_min = (f64::INFINITY, f64::NAN);
    for &y in &ys {
        let a = model.alpha(y);
        let c = -2.0 * a.value + y * a.d1;
        if !(c <= conv.0) {
            conv = (c, y);
        }
        if !(a.d1 >= slope_min.0) {
            slope_min = (a.d1, y);
        }
    }
    report.checks.push(check(
        "alpha-growth-bound",
        conv.0 <= 0.0,
        vec![("max_value", conv.0), ("y", conv.1)],
        gs.clone(),
    ));
    report.checks.push(check(
        "alpha-increasing",
        slope_min.0 > 0.0,
        vec![("min_derivative", slope_min.0), ("y", slope_min.1)],
        gs.clone(),
    ));

    // growth exponents by two-point slopes
    let e0 = slope(model, 1e-5, 2e-5);
    let a1 = model.alpha(1e-5).value / 1e-5;
    report.checks.push(check(
        "growth-at-zero",
        (e0 - 1.0).abs() < GROWTH_TOL,
        vec![("exponent", e0), ("expected", 1.0), ("A1", a1)],
        "y{1e-5,2e-5}".into(),
    ));
    let (b1, p) = model.alpha.tail_constants();
    let einf = slope(model, 1e4, 2e4);
    report.checks.push(check(
        "growth-at-infinity",
        (einf - p).abs() < GROWTH_TOL && einf <= 1.0 + GROWTH_TOL && p > 0.0 && p <= 1.0,
        vec![
            ("exponent", einf),
            ("expected", p),
            ("B1", model.alpha(1e4).value / 1e4f64.powf(einf)),
            ("declared_B1", b1),
        ],
        "y{1e4,2e4}".into(),
    ));

    // potential bound
    let mut v_max = (f64::NEG_INFINITY, f64::NAN, f64::NAN);
    for &x in &xs {
        for &y in &ys {
            let v = gauge_potential(model, x, y).unwrap_or(f64::NAN);
            if !(v <= v_max.0) {
                v_max = (v, x, y);
            }
        }
    }
    let probe = |y: f64| {
        xs.iter()
            .map(|&x| gauge_potential(model, x, y).unwrap_or(f64::NAN))
            .fold(
                f64::NEG_INFINITY,
                |m, v| if v > m || v.is_nan() { v } else { m },
            )
    };
    let scale = 10.0 * v_max.0.abs().max(1.0);
    let diverges = |inner: f64, outer: f64| !outer.is_finite() || (outer > scale && outer > inner);
    let (v_lo_in, v_lo_out) = (probe(grid.y_min), probe(grid.y_min * 1e-4));
    let (v_hi_in, v_hi_out) = (probe(grid.y_max), probe(grid.y_max * 1e4));
    let limits = potential_limits(model, grid.y_max);
    report.checks.push(check(
        "potential-bounded",
        v_max.0.is_finite() && !diverges(v_lo_in, v_lo_out) && !diverges(v_hi_in, v_hi_out),
        vec![
            ("V_max", v_max.0),
            ("x", v_max.1),
            ("y", v_max.2),
            ("limit_at_zero", limits.at_zero),
            ("limit_at_infinity", limits.at_infinity),
            ("V_probe_small_y", v_lo_out),
            ("V_probe_large_y", v_hi_out),
        ],
        gs,
    ));

    let mu0 = mu0_estimate(model);
    if mu0 > 0.0 {
        report.warnings.push(format!(
            "mu0 = {mu0} > 0: the tail estimate behind the call asymptote assumes mu0 = 0"
        ));
    }
    report
}
