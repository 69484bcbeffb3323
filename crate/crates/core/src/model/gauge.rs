//! Gauge transform that turns the generator into ½Δ plus a potential.
//!
//! For ρ = 0 the gauge is
//! `χ(x,y) = √σ(x) e^{x/2} √(α(y)/y) exp(−∫₁^y μ/α² du)`, and the potential
//! `V = ((𝒜 + ½Δ)χ)/χ` has the closed form
//! `−⅛y²[σ² + σ′² − 2σσ″] + μg + ½α²(g² + g′)` with
//! `g = −μ/α² + ½(α′/α − 1/y)`.
//!
//! For ρ ≠ 0 (constant σ₀, μ of the prop45 form with constant c) the gauge
//! has constant log-derivative `C` in x and `g(y) = k y/α(y)` in y, with
//! `k = (2c − ρσ₀)/(2(1 − ρ²))`, `C = (σ₀ − 2ρc)/(2σ₀(1 − ρ²))`.

use super::{ModelSpec, MuFamily};
use crate::error::{LsvError, Result};
use crate::numerics::{integrate, QuadOptions};

fn check_y(y: f64) -> Result<()> {
    if y > 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(LsvError::InvalidInput(format!("y must be > 0, got {y}")))
    }
}

/// ∫₁^y μ(u)/α(u)² du, integrated in log-space.
fn drift_integral(model: &ModelSpec, y: f64) -> Result<f64> {
    if matches!(model.mu, MuFamily::Zero) {
        return Ok(0.0);
    }
    let f = |v: f64| {
        let u = v.exp();
        let a = model.alpha(u).value;
        model.mu(u).0 / (a * a) * u
    };
    Ok(integrate(f, 0.0, y.ln(), QuadOptions::with_abs_tol(1e-10))?.value)
}

/// The gauge function χ(x, y) (uncorrelated models only).
pub fn gauge_chi(model: &ModelSpec, x: f64, y: f64) -> Result<f64> {
    check_y(y)?;
    if model.rho != 0.0 {
        return Err(LsvError::InvalidInput(
            "gauge_chi is defined for rho = 0 only".into(),
        ));
    }
    let sigma = model.sigma(x).value;
    let alpha = model.alpha(y).value;
    Ok(sigma.sqrt() * (0.5 * x).exp() * (alpha / y).sqrt() * (-drift_integral(model, y)?).exp())
}

/// The y-part of the uncorrelated potential, V̄(y) = μg + ½α²(g² + g′).
pub(crate) fn potential_y_part(model: &ModelSpec, y: f64) -> f64 {
    let a = model.alpha(y);
    let (mu, dmu) = model.mu(y);
    let (al, da, dda) = (a.value, a.d1, a.d2);
    let g = -mu / (al * al) + 0.5 * (da / al - 1.0 / y);
    let dg = -dmu / (al * al)
        + 2.0 * mu * da / (al * al * al)
        + 0.5 * (dda / al - da * da / (al * al) + 1.0 / (y * y));
    mu * g + 0.5 * al * al * (g * g + dg)
}

/// The gauge potential V(x, y).
pub fn gauge_potential(model: &ModelSpec, x: f64, y: f64) -> Result<f64> {
    check_y(y)?;
    if model.rho == 0.0 {
        let s = model.sigma(x);
        let skew = s.value * s.value + s.d1 * s.d1 - 2.0 * s.value * s.d2;
        return Ok(-0.125 * y * y * skew + potential_y_part(model, y));
    }
    let (sigma0, c) = match (model.sigma_is_constant(), model.mu) {
        (Some(s), MuFamily::Prop45 { c }) => (s, c),
        _ => {
            return Err(LsvError::InvalidInput(
                "rho != 0 requires constant sigma and the prop45 mu family".into(),
            ))
        }
    };
    let rho = model.rho;
    let one_m = 1.0 - rho * rho;
    let k = (2.0 * c - rho * sigma0) / (2.0 * one_m);
    let big_c = (sigma0 - 2.0 * rho * c) / (2.0 * sigma0 * one_m);
    let a = model.alpha(y);
    let (mu, _) = model.mu(y);
    let g = k * y / a.value;
    let dg = k * (a.value - y * a.d1) / (a.value * a.value);
    Ok(0.5 * sigma0 * sigma0 * y * y * big_c * (big_c - 1.0)
        + rho * sigma0 * y * a.value * big_c * g
        + 0.5 * a.value * a.value * (g * g + dg)
        + mu * g)
}

/// Analytic end behaviour of the potential bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialLimits {
    /// lim V̄(y) as y → 0⁺ (ρ = 0), or the y² coefficient for ρ ≠ 0.
    pub at_zero: f64,
    /// Leading large-y behaviour evaluated at the probe point `y_probe`.
    pub at_infinity: f64,
    pub y_probe: f64,
}

/// End limits of the potential: ½μ₀(1 − μ₀/A₁²) at zero and
/// `(1−2p)κ/2 + (3−p)(1−p)B₁²/8 y^{2(p−1)} − κ²/(2B₁²) y^{2(1−p)}` at
/// infinity (evaluated at `y_probe`). For ρ ≠ 0 both ends follow
/// `−y²/(8(1−ρ²))[(2c−ρσ₀)² + σ₀²(1−ρ²)]`, evaluated at `y_probe` for the
/// infinity entry and reported as 0 at the origin.
pub fn potential_limits(model: &ModelSpec, y_probe: f64) -> PotentialLimits {
    let (b1, p) = model.alpha.tail_constants();
    if model.rho != 0.0 {
        let sigma0 = model.sigma_is_constant().unwrap_or(1.0);
        let c = match model.mu {
            MuFamily::Prop45 { c } => c,
            _ => 0.0,
        };
        let one_m = 1.0 - model.rho * model.rho;
        let coef =
            -((2.0 * c - model.rho * sigma0).powi(2) + sigma0 * sigma0 * one_m) / (8.0 * one_m);
        return PotentialLimits {
            at_zero: 0.0,
            at_infinity: coef * y_probe * y_probe,
            y_probe,
        };
    }
    let a1 = model.alpha.origin_slope().unwrap_or(f64::NAN);
    let mu0 = mu0_estimate(model);
    let kappa = model.mu.tail_kappa();
    PotentialLimits {
        at_zero: 0.5 * mu0 * (1.0 - mu0 / (a1 * a1)),
        at_infinity: 0.5 * (1.0 - 2.0 * p) * kappa
            + (3.0 - p) * (1.0 - p) * b1 * b1 / 8.0 * y_probe.powf(2.0 * (p - 1.0))
            - kappa * kappa / (2.0 * b1 * b1) * y_probe.powf(2.0 * (1.0 - p)),
        y_probe,
    }
}

/// μ₀ = lim μ(y)/y as y → 0.
pub(crate) fn mu0_estimate(model: &ModelSpec) -> f64 {
    match model.mu {
        MuFamily::Zero => 0.0,
        MuFamily::Rational { mu0, .. } => mu0,
        MuFamily::Prop45 { .. } => {
            let y = 1e-9;
            model.mu(y).0 / y
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AlphaFamily, SigmaFamily};

    #[test]
    fn chi_at_unit_point_is_one() {
        let m = ModelSpec::sabr(0.2, 1.0);
        assert!((gauge_chi(&m, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi_sabr_off_unit_point() {
        // α(y)/y = 1 for SABR, so only e^{x/2} survives
        let m = ModelSpec::sabr(0.2, 1.0);
        let chi = gauge_chi(&m, 0.2, 0.5).unwrap();
        assert!((chi - 0.1f64.exp()).abs() < 1e-14, "{chi}");
        assert!((chi - 1.105171).abs() < 1e-6);
    }

    #[test]
    fn chi_small_y_power_law() {
        // α = νy, μ = μ₀y/(1+y²) − κy³/(1+y²): χ ≍ √ν √σ e^{x/2} y^{−μ₀/ν²}
        let mut m = ModelSpec::sabr(0.2, 1.2);
        m.mu = MuFamily::Rational {
            mu0: 0.3,
            kappa: 0.5,
        };
        let asym = |y: f64| 1.2f64.sqrt() * y.powf(-0.3 / 1.44);
        let r4 = gauge_chi(&m, 0.0, 1e-4).unwrap() / asym(1e-4);
        let r6 = gauge_chi(&m, 0.0, 1e-6).unwrap() / asym(1e-6);
        assert!((r4 / r6 - 1.0).abs() < 0.02, "{r4} {r6}");
        // exact finite part: ∫₁^y μ/α² = (μ₀/ν²)(ln y − ½ln(1+y²) + ½ln2) − (κ/2ν²)(ln(1+y²) − ln2)
        let y: f64 = 1e-4;
        let exact_int = 0.3 / 1.44 * (y.ln() - 0.5 * (1.0 + y * y).ln() + 0.5 * 2f64.ln())
            - 0.5 / (2.0 * 1.44) * ((1.0 + y * y).ln() - 2f64.ln());
        let exact = 1.2f64.sqrt() * (-exact_int).exp();
        assert!((gauge_chi(&m, 0.0, y).unwrap() / exact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn chi_rejects_bad_inputs() {
        let m = ModelSpec::sabr(0.2, 1.0);
        assert!(gauge_chi(&m, 0.0, 0.0).is_err());
        assert!(gauge_potential(&m, 0.0, -1.0).is_err());
    }

    #[test]
    fn sabr_potential_is_minus_y_squared_over_eight() {
        let m = ModelSpec::sabr(0.2, 1.0);
        for &(x, y) in &[(0.0, 0.3), (1.5, 2.0), (-0.7, 0.01)] {
            let v = gauge_potential(&m, x, y).unwrap();
            assert!((v + y * y / 8.0).abs() < 1e-14 * (1.0 + y * y), "{v}");
        }
    }

    #[test]
    fn correlated_potential_tail() {
        let mut m = ModelSpec::sabr(0.2, 1.0);
        m.rho = -0.5;
        m.mu = MuFamily::Prop45 { c: 0.0 };
        let y = 1e3;
        let v = gauge_potential(&m, 0.0, y).unwrap();
        let lim = potential_limits(&m, y).at_infinity;
        assert!((v / lim - 1.0).abs() < 0.01, "{v} {lim}");
        // for α = y, c = 0, ρ = −½ the potential is exactly −y²/6
        assert!((v + y * y / 6.0).abs() < 1e-9 * y * y);
    }

    #[test]
    fn correlated_potential_general_power() {
        let mut m = ModelSpec::sabr(0.2, 0.8);
        m.alpha = AlphaFamily::Power { nu: 0.8, p: 0.7 };
        m.rho = -0.4;
        m.mu = MuFamily::Prop45 { c: 0.3 };
        // V = (𝒜 + ½Δ)h / h with h = e^{Cx} exp(∫ g); check against a finite
        // difference of the generator applied to h
        let sigma0 = 1.0;
        let one_m = 1.0 - 0.16;
        let k = (2.0 * 0.3 + 0.4 * sigma0) / (2.0 * one_m);
        let big_c = (sigma0 + 2.0 * 0.4 * 0.3) / (2.0 * sigma0 * one_m);
        let log_h = |x: f64, y: f64| {
            let gi = integrate(|u| k * u / m.alpha(u).value, 1.0, y, QuadOptions::default())
                .unwrap()
                .value;
            big_c * x + gi
        };
        let (x, y) = (0.1, 0.9);
        let h = 1e-3;
        let f = |dx: f64, dy: f64| (log_h(x + dx, y + dy) - log_h(x, y)).exp();
        let hx = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let hy = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
        let hxx = (f(h, 0.0) - 2.0 + f(-h, 0.0)) / (h * h);
        let hyy = (f(0.0, h) - 2.0 + f(0.0, -h)) / (h * h);
        let hxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        let a = m.alpha(y).value;
        let mu = m.mu(y).0;
        let gen = 0.5 * y * y * hxx + m.rho * y * a * hxy + 0.5 * a * a * hyy - 0.5 * y * y * hx
            + mu * hy;
        let v = gauge_potential(&m, x, y).unwrap();
        assert!((gen - v).abs() < 1e-5, "{gen} vs {v}");
    }

    #[test]
    fn uncorrelated_potential_matches_generator_on_chi() {
        let mut m = ModelSpec::sabr(0.2, 1.1);
        m.sigma = SigmaFamily::Logistic {
            low: 0.8,
            high: 1.25,
            steepness: 1.5,
            center: 0.05,
        };
        m.alpha = AlphaFamily::Power { nu: 1.1, p: 0.8 };
        m.mu = MuFamily::Rational {
            mu0: 0.2,
            kappa: 0.4,
        };
        let (x, y) = (0.15, 0.7);
        let chi = |x: f64, y: f64| gauge_chi(&m, x, y).unwrap();
        let h = 1e-3;
        let c0 = chi(x, y);
        let cx = (chi(x + h, y) - chi(x - h, y)) / (2.0 * h);
        let cy = (chi(x, y + h) - chi(x, y - h)) / (2.0 * h);
        let cxx = (chi(x + h, y) - 2.0 * c0 + chi(x - h, y)) / (h * h);
        let cyy = (chi(x, y + h) - 2.0 * c0 + chi(x, y - h)) / (h * h);
        let s = m.sigma(x).value;
        let a = m.alpha(y).value;
        let mu = m.mu(y).0;
        let gen = (0.5 * s * s * y * y * cxx + 0.5 * a * a * cyy - 0.5 * s * s * y * y * cx
            + mu * cy)
            / c0;
        let v = gauge_potential(&m, x, y).unwrap();
        assert!((gen - v).abs() < 1e-5, "{gen} vs {v}");
    }
}
