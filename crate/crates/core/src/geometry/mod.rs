//! Riemannian geometry of the model and the distance data feeding the
//! leading-order heat kernel.
//!
//! The metric is the inverse of the diffusion matrix
//! `a = [[σ²y², ρσyα], [ρσyα, α²]]`; for ρ = 0 it is
//! `dx²/(σ(x)²y²) + dy²/α(y)²`.

mod jacobi;
mod line;
mod point;
mod sabr;

pub use jacobi::{jacobi_u0, jacobi_u0_with};
pub use line::{solve_line_geodesic, LineGeodesic};
pub use point::{distance_point, phi_second, PointGeodesic};
pub use sabr::{sabr_reference, SabrReference};

use crate::error::{LsvError, Result};
use crate::model::ModelSpec;

/// Metric coefficients at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPoint {
    pub g: [[f64; 2]; 2],
    pub det_g: f64,
}

impl MetricPoint {
    /// √|g|, the Riemannian volume density.
    pub fn sqrt_det(&self) -> f64 {
        self.det_g.sqrt()
    }

    pub fn inner(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        self.g[0][0] * u[0] * v[0]
            + self.g[0][1] * (u[0] * v[1] + u[1] * v[0])
            + self.g[1][1] * u[1] * v[1]
    }

    pub fn norm(&self, u: [f64; 2]) -> f64 {
        self.inner(u, u).sqrt()
    }
}

/// One sample of a unit-speed geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

fn check_point(model: &ModelSpec, y: f64) -> Result<()> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(LsvError::InvalidInput(format!("y must be > 0, got {y}")));
    }
    if !(model.rho.abs() < 1.0) {
        return Err(LsvError::InvalidInput(format!(
            "|rho| must be < 1, got {}",
            model.rho
        )));
    }
    Ok(())
}

pub fn metric_tensor(model: &ModelSpec, x: f64, y: f64) -> Result<MetricPoint> {
    check_point(model, y)?;
    let j = MetricJet::new(model, x, y);
    Ok(MetricPoint {
        g: j.g,
        det_g: j.det(),
    })
}

/// Metric, inverse and the partials needed for Christoffel symbols and the
/// Brioschi formula (coordinates u = x, v = y).
#[derive(Debug, Clone, Copy)]
pub(crate) struct MetricJet {
    pub g: [[f64; 2]; 2],
    pub inv: [[f64; 2]; 2],
    /// `dg[l][i][j] = ∂_l g_ij`
    pub dg: [[[f64; 2]; 2]; 2],
    pub e_vv: f64,
    pub f_uv: f64,
    pub g_uu: f64,
}

impl MetricJet {
    pub fn new(model: &ModelSpec, x: f64, y: f64) -> Self {
        let s = model.sigma(x);
        let a = model.alpha(y);
        let rho = model.rho;
        let r2 = 1.0 - rho * rho;
        let (sv, s1) = (s.value, s.d1);
        let (av, a1) = (a.value, a.d1);

        let g11 = 1.0 / (sv * sv * y * y * r2);
        let g12 = -rho / (sv * y * av * r2);
        let g22 = 1.0 / (av * av * r2);
        let g11_x = -2.0 * s1 / (sv * sv * sv * y * y * r2);
        let g11_y = -2.0 / (sv * sv * y * y * y * r2);
        let g11_yy = 6.0 / (sv * sv * y * y * y * y * r2);
        let g12_x = rho * s1 / (sv * sv * y * av * r2);
        let g12_y = rho * (av + y * a1) / (sv * y * y * av * av * r2);
        let g12_xy = -rho * s1 * (av + y * a1) / (r2 * sv * sv * y * y * av * av);
        let g22_y = -2.0 * a1 / (av * av * av * r2);

        let c = rho * sv * y * av;
        MetricJet {
            g: [[g11, g12], [g12, g22]],
            inv: [[sv * sv * y * y, c], [c, av * av]],
            dg: [
                [[g11_x, g12_x], [g12_x, 0.0]],
                [[g11_y, g12_y], [g12_y, g22_y]],
            ],
            e_vv: g11_yy,
            f_uv: g12_xy,
            g_uu: 0.0,
        }
    }

    pub fn det(&self) -> f64 {
        self.g[0][0] * self.g[1][1] - self.g[0][1] * self.g[0][1]
    }

    /// `Γ[k][i][j]`
    pub fn christoffel(&self) -> [[[f64; 2]; 2]; 2] {
        let mut lowered = [[[0.0; 2]; 2]; 2];
        for (l, low) in lowered.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    low[i][j] = 0.5 * (self.dg[i][j][l] + self.dg[j][i][l] - self.dg[l][i][j]);
                }
            }
        }
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for (k, gk) in gamma.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    gk[i][j] =
                        self.inv[k][0] * lowered[0][i][j] + self.inv[k][1] * lowered[1][i][j];
                }
            }
        }
        gamma
    }

    pub fn brioschi(&self) -> f64 {
        let (e, f, g) = (self.g[0][0], self.g[0][1], self.g[1][1]);
        let (e_u, e_v) = (self.dg[0][0][0], self.dg[1][0][0]);
        let (f_u, f_v) = (self.dg[0][0][1], self.dg[1][0][1]);
        let (g_u, g_v) = (self.dg[0][1][1], self.dg[1][1][1]);
        let m1 = [
            [
                -0.5 * self.e_vv + self.f_uv - 0.5 * self.g_uu,
                0.5 * e_u,
                f_u - 0.5 * e_v,
            ],
            [f_v - 0.5 * g_u, e, f],
            [0.5 * g_v, f, g],
        ];
        let m2 = [
            [0.0, 0.5 * e_v, 0.5 * g_u],
            [0.5 * e_v, e, f],
            [0.5 * g_u, f, g],
        ];
        let det = e * g - f * f;
        (det3(&m1) - det3(&m2)) / (det * det)
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Gaussian curvature from the Brioschi formula on the analytic metric
/// partials. Valid for every admissible model.
pub fn brioschi_curvature(model: &ModelSpec, x: f64, y: f64) -> Result<f64> {
    check_point(model, y)?;
    Ok(MetricJet::new(model, x, y).brioschi())
}

/// Gaussian curvature κ(x, y). For ρ = 0 this is `α(−2α + yα′)/y²`,
/// independent of x and σ.
pub fn gauss_curvature(model: &ModelSpec, x: f64, y: f64) -> Result<f64> {
    check_point(model, y)?;
    if model.rho == 0.0 {
        let a = model.alpha(y);
        Ok(a.value * (-2.0 * a.value + y * a.d1) / (y * y))
    } else {
        Ok(MetricJet::new(model, x, y).brioschi())
    }
}

/// Right-hand side of the geodesic equation in state `[x, y, ẋ, ẏ]`.
pub(crate) fn geodesic_rhs(model: &ModelSpec) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + '_ {
    move |_, s| {
        if !(s[1] > 0.0) {
            return [f64::NAN; 4];
        }
        let gam = MetricJet::new(model, s[0], s[1]).christoffel();
        let v = [s[2], s[3]];
        let acc = |k: usize| {
            -(gam[k][0][0] * v[0] * v[0]
                + 2.0 * gam[k][0][1] * v[0] * v[1]
                + gam[k][1][1] * v[1] * v[1])
        };
        [v[0], v[1], acc(0), acc(1)]
    }
}

/// Squared speed g(γ̇, γ̇) of a path sample.
pub fn speed_squared(model: &ModelSpec, p: &PathSample) -> f64 {
    let j = MetricJet::new(model, p.x, p.y);
    j.g[0][0] * p.vx * p.vx + 2.0 * j.g[0][1] * p.vx * p.vy + j.g[1][1] * p.vy * p.vy
}

/// Which end of the volatility axis a tail estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailEnd {
    Zero,
    Infinity,
}

/// Leading behaviour of the distance to a far point on the vertical line:
/// `|log y₁|/(ρ̄A₁)` at zero, `log y₁/(ρ̄B₁)` (p = 1) or
/// `y₁^{1−p}/(ρ̄B₁(1−p))` at infinity.
pub fn tail_distance_estimate(model: &ModelSpec, y1: f64, end: TailEnd) -> Result<f64> {
    check_point(model, y1)?;
    let rho_bar = model.rho_bar();
    match end {
        TailEnd::Zero => {
            let a1 = model.alpha.origin_slope().ok_or_else(|| {
                LsvError::InvalidInput("alpha is not linear at the origin".into())
            })?;
            Ok(y1.ln().abs() / (rho_bar * a1))
        }
        TailEnd::Infinity => {
            let (b1, p) = model.alpha.tail_constants();
            if p == 1.0 {
                Ok(y1.ln() / (rho_bar * b1))
            } else {
                Ok(y1.powf(1.0 - p) / (rho_bar * b1 * (1.0 - p)))
            }
        }
    }
}
