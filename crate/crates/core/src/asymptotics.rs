//! Call price asymptote and the implied volatility expansion
//! `σ̂_t(x)² = σ̂(x)² + a(x) t + o(t)`.
//!
//! With `φ = d²/2`, the call asymptote is
//! `E(S_t − K)⁺ − (S₀ − K)⁺ ~ A_SV/√(2π) · e^{−φ/t} t^{3/2}` where
//! `A_SV = K σ(x₁)² ψ / (√φ″ · 2φ)`. Matching against Black–Scholes with
//! `A_BS(x, σ) = K e^{−x/2} σ³/x²` gives `σ̂ = |x|/d` and
//! `a = (2σ̂⁴/x²) log(A_SV/A_BS)`.
//!
//! Jump-to-default with intensity λ multiplies 𝒫 by `e^{λd/y₁*}`, so
//! `a^J = a + 2λσ̂⁴d/(x²y₁*)` and `Δσ̂^J = λσ̂²t/(|x|y₁*)`.

use rayon::prelude::*;

use crate::error::{LsvError, Result};
use crate::geometry::solve_line_geodesic;
use crate::heatkernel::kernel_factors;
use crate::model::ModelSpec;

const ATM_GUARD: f64 = 1e-6;
/// Below this |x| the correction a(x) of the generic pipeline is
/// interpolated from nodes at ±0.01, ±0.02.
const SMALL_X: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallAsymptote {
    pub strike: f64,
    pub t: f64,
    pub intrinsic: f64,
    /// `A_SV/√(2π) · e^{−φ*/t} t^{3/2}`
    pub leading_term: f64,
    pub a_sv: f64,
    pub phi_star: f64,
}

impl CallAsymptote {
    /// Intrinsic value plus the leading term.
    pub fn price(&self) -> f64 {
        self.intrinsic + self.leading_term
    }
}

/// One point of the small-time smile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmilePoint {
    /// Log-moneyness x₁ − x₀.
    pub x: f64,
    pub t: f64,
    /// Leading-order implied volatility σ̂(x).
    pub sigma0: f64,
    /// Correction a(x), in variance per unit time.
    pub a: f64,
    pub a_jump: f64,
    /// `√(σ̂² + at)`, absent when the radicand is not positive.
    pub sigma_t: Option<f64>,
    pub sigma_t_jump: Option<f64>,
    /// First-order implied-vol lift from jump-to-default, `λσ̂²t/(|x|y₁*)`.
    pub delta_sigma_jump: f64,
    /// A_SV without the jump factor.
    pub a_sv: f64,
    pub d: f64,
    pub y1_star: f64,
}

fn check_t(t: f64, allow_zero: bool) -> Result<()> {
    if (t > 0.0 || (allow_zero && t == 0.0)) && t.is_finite() {
        Ok(())
    } else {
        Err(LsvError::InvalidInput(format!("invalid maturity t = {t}")))
    }
}

fn check_atm(x: f64) -> Result<()> {
    if !x.is_finite() || x.abs() < ATM_GUARD {
        return Err(LsvError::InvalidInput(format!(
            "log-moneyness {x} is at the money (|x| < {ATM_GUARD}); the expansion excludes it"
        )));
    }
    Ok(())
}

/// `A_BS(x, σ) = K e^{−x/2} σ³/x²`.
pub fn a_bs(strike: f64, x: f64, sigma: f64) -> f64 {
    strike * (-0.5 * x).exp() * sigma.powi(3) / (x * x)
}

/// Geometry and A_SV (without jump factor) at log-strike `x1`.
struct Pipeline {
    d: f64,
    y1_star: f64,
    a_sv: f64,
    phi: f64,
}

fn pipeline(model: &ModelSpec, x1: f64) -> Result<Pipeline> {
    let geo = solve_line_geodesic(model, x1)?;
    let k = kernel_factors(model, &geo)?;
    let strike = x1.exp();
    let s = model.sigma(x1).value;
    let a_sv = strike * s * s * k.psi / k.phi_second.sqrt() / (2.0 * k.phi);
    Ok(Pipeline {
        d: geo.d,
        y1_star: geo.y1_star,
        a_sv,
        phi: k.phi,
    })
}

pub fn call_asymptote(model: &ModelSpec, strike: f64, t: f64) -> Result<CallAsymptote> {
    check_t(t, false)?;
    if !(strike > 0.0) {
        return Err(LsvError::InvalidInput(format!(
            "strike must be > 0, got {strike}"
        )));
    }
    let x1 = strike.ln();
    check_atm(x1 - model.x0)?;
    let p = pipeline(model, x1)?;
    let a_sv = p.a_sv * (model.lambda * p.d / p.y1_star).exp();
    Ok(CallAsymptote {
        strike,
        t,
        intrinsic: (model.s0() - strike).max(0.0),
        leading_term: a_sv / (2.0 * std::f64::consts::PI).sqrt() * (-p.phi / t).exp() * t.powf(1.5),
        a_sv,
        phi_star: p.phi,
    })
}

/// Two-term Black–Scholes expansion for a maturity-dependent variance
/// `σ² + at`: `(S₀−K)⁺ + K e^{−x²/2σ²t}/√(2π) · e^{−x/2} e^{ax²/2σ⁴} σ³/x² t^{3/2}`.
pub fn bs_timedep_asymptote(s0: f64, strike: f64, t: f64, sigma: f64, a: f64) -> Result<f64> {
    check_t(t, false)?;
    if !(s0 > 0.0 && strike > 0.0 && sigma > 0.0) {
        return Err(LsvError::InvalidInput(format!(
            "S0, K and sigma must be positive, got {s0}, {strike}, {sigma}"
        )));
    }
    let x = (strike / s0).ln();
    if x == 0.0 {
        return Err(LsvError::InvalidInput("expansion excludes K = S0".into()));
    }
    if a < 0.0 && t >= sigma * sigma / -a {
        return Err(LsvError::InvalidInput(format!(
            "t = {t} outside the validity range t < sigma^2/|a| = {}",
            sigma * sigma / -a
        )));
    }
    let s2 = sigma * sigma;
    let term = strike * (-x * x / (2.0 * s2 * t)).exp() / (2.0 * std::f64::consts::PI).sqrt()
        * (-0.5 * x).exp()
        * (a * x * x / (2.0 * s2 * s2)).exp()
        * sigma.powi(3)
        / (x * x)
        * t.powf(1.5);
    Ok((s0 - strike).max(0.0) + term)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    model: &ModelSpec,
    x: f64,
    t: f64,
    sigma0: f64,
    a: f64,
    a_sv: f64,
    d: f64,
    y1_star: f64,
) -> SmilePoint {
    let lambda = model.lambda;
    let s4 = sigma0.powi(4);
    let a_jump = a + 2.0 * lambda * s4 * d / (x * x * y1_star);
    let root = |v: f64| (v > 0.0).then(|| v.sqrt());
    SmilePoint {
        x,
        t,
        sigma0,
        a,
        a_jump,
        sigma_t: root(sigma0 * sigma0 + a * t),
        sigma_t_jump: root(sigma0 * sigma0 + a_jump * t),
        delta_sigma_jump: lambda * sigma0 * sigma0 * t / (x.abs() * y1_star),
        a_sv,
        d,
        y1_star,
    }
}

/// Smile point at log-strike `x1` from the generic geometric pipeline.
pub fn smile_point(model: &ModelSpec, x1: f64, t: f64) -> Result<SmilePoint> {
    check_t(t, true)?;
    let x = x1 - model.x0;
    check_atm(x)?;
    if x.abs() < SMALL_X {
        let geo = solve_line_geodesic(model, x1)?;
        let sigma0 = x.abs() / geo.d;
        let nodes = [-0.02, -0.01, 0.01, 0.02];
        let mut vals = [0.0; 4];
        for (v, &n) in vals.iter_mut().zip(&nodes) {
            *v = smile_point(model, model.x0 + n, t)?.a;
        }
        let a = lagrange(&nodes, &vals, x);
        let strike = model.s0() * x.exp();
        let a_sv = a_bs(strike, x, sigma0) * (a * x * x / (2.0 * sigma0.powi(4))).exp();
        return Ok(assemble(model, x, t, sigma0, a, a_sv, geo.d, geo.y1_star));
    }
    let p = pipeline(model, x1)?;
    let sigma0 = x.abs() / p.d;
    let strike = x1.exp();
    let a = 2.0 * sigma0.powi(4) / (x * x) * (p.a_sv / a_bs(strike, x, sigma0)).ln();
    Ok(assemble(model, x, t, sigma0, a, p.a_sv, p.d, p.y1_star))
}

fn lagrange(nodes: &[f64; 4], vals: &[f64; 4], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut w = vals[i];
        for j in 0..4 {
            if i != j {
                w *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
        acc += w;
    }
    acc
}

/// log(A_SV/A_BS) for SABR as a function of u = νx/y₀:
/// `¼ log(1+u²) + log(asinh u / u)`, with a series for small |u|.
pub fn sabr_log_ratio(u: f64) -> f64 {
    let u = u.abs();
    let tail = if u < 1e-3 {
        let u2 = u * u;
        -u2 / 6.0 + 11.0 * u2 * u2 / 180.0
    } else {
        (u.asinh() / u).ln()
    };
    0.25 * (u * u).ln_1p() + tail
}

/// Smile point from the closed forms for SABR (α = νy, ρ = 0, σ ≡ 1, x₀ = 0)
/// with optional jump intensity `lambda`.
pub fn sabr_smile_point(x: f64, y0: f64, nu: f64, t: f64, lambda: f64) -> Result<SmilePoint> {
    check_t(t, true)?;
    check_atm(x)?;
    if !(y0 > 0.0 && nu > 0.0 && lambda >= 0.0) {
        return Err(LsvError::InvalidInput(format!(
            "need y0 > 0, nu > 0, lambda >= 0; got {y0}, {nu}, {lambda}"
        )));
    }
    let u = nu * x / y0;
    let d = u.abs().asinh() / nu;
    let sigma0 = if u.abs() < 1e-8 {
        y0 * (1.0 + u * u / 6.0)
    } else {
        x.abs() / d
    };
    let y1_star = y0 * u.hypot(1.0);
    let a = 2.0 * sigma0.powi(4) / (x * x) * sabr_log_ratio(u);
    let a_sv = (0.5 * x).exp() * (y0 * y1_star).sqrt() / (d * d);
    let model = ModelSpec::sabr(y0, nu).with_lambda(lambda);
    Ok(assemble(&model, x, t, sigma0, a, a_sv, d, y1_star))
}

/// Smile over a grid of log-strikes, evaluated in parallel; output order
/// follows `x1s`.
pub fn smile(model: &ModelSpec, x1s: &[f64], t: f64) -> Vec<Result<SmilePoint>> {
    x1s.par_iter()
        .map(|&x1| smile_point(model, x1, t))
        .collect()
}

/// Leading order of a deep out-of-the-money put under jump-to-default with
/// S₀ = 1: `E(K − S_t)⁺ ≈ λKt`.
pub fn otm_put_leading(lambda: f64, strike: f64, t: f64) -> Result<f64> {
    check_t(t, false)?;
    if !(lambda >= 0.0) {
        return Err(LsvError::InvalidInput(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    if !(strike > 0.0 && strike < 1.0) {
        return Err(LsvError::InvalidInput(format!(
            "out-of-the-money put needs 0 < K < S0 = 1, got {strike}"
        )));
    }
    Ok(lambda * strike * t)
}

/// `V₁(t, x) = log[4√π a₀ e^{−x/2} L^{3/2}/|x|]/L` with `L = log(1/t)`,
/// `a₀ = λK`.
pub fn put_v1(lambda: f64, strike: f64, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < (-1f64).exp()) {
        return Err(LsvError::InvalidInput(format!(
            "put wing expansion needs 0 < t < 1/e, got {t}"
        )));
    }
    let a0 = lambda * strike;
    if !(a0 > 0.0) {
        return Err(LsvError::InvalidInput(format!(
            "put wing expansion needs lambda * K > 0, got {a0}"
        )));
    }
    if x == 0.0 || !x.is_finite() {
        return Err(LsvError::InvalidInput(format!("invalid log-moneyness {x}")));
    }
    let l = (1.0 / t).ln();
    let arg = 4.0 * std::f64::consts::PI.sqrt() * a0 * (-0.5 * x).exp() * l.powf(1.5) / x.abs();
    Ok(arg.ln() / l)
}

/// Small-time implied variance of an out-of-the-money put under
/// jump-to-default: `σ̂² ≈ x²/(2t log(1/t)) · (1 + V₁)`.
pub fn put_smile_smalltime(lambda: f64, strike: f64, x: f64, t: f64) -> Result<f64> {
    let v1 = put_v1(lambda, strike, x, t)?;
    let l = (1.0 / t).ln();
    Ok(0.5 * x * x / (t * l) * (1.0 + v1))
}
