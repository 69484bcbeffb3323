//! Model coefficient families and the validated [`ModelSpec`].
//!
//! The state is `(X, Y)` with `X = log S` and
//!
//! ```text
//! dX = -½ σ(X)² Y² dt + σ(X) Y dW¹
//! dY = μ(Y) dt + α(Y) dW²,      dW¹ dW² = ρ dt
//! ```
//!
//! Coefficients come from closed families with analytic derivatives so that
//! the geometric quantities built on them are exact. Adding a
//! family means adding a variant plus its `eval` arm and validation.

mod audit;
mod config;
mod gauge;

pub use audit::{audit_assumptions, AuditCheck, AuditGrid, AuditReport};
pub use config::{build_model, parse_model};
pub use gauge::{gauge_chi, gauge_potential, potential_limits, PotentialLimits};

use crate::error::{LsvError, Result};

/// Value and first two derivatives of a coefficient function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Local volatility component σ(x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaFamily {
    /// σ(x) = value
    Constant { value: f64 },
    /// σ(x) = low + (high − low) / (1 + e^{−steepness (x − center)})
    Logistic {
        low: f64,
        high: f64,
        steepness: f64,
        center: f64,
    },
}

impl SigmaFamily {
    pub fn kind(&self) -> &'static str {
        match self {
            SigmaFamily::Constant { .. } => "sigma-constant",
            SigmaFamily::Logistic { .. } => "sigma-logistic",
        }
    }

    pub fn eval(&self, x: f64) -> Derivs {
        match *self {
            SigmaFamily::Constant { value } => Derivs {
                value,
                d1: 0.0,
                d2: 0.0,
            },
            SigmaFamily::Logistic {
                low,
                high,
                steepness,
                center,
            } => {
                let s = logistic(steepness * (x - center));
                let ds = steepness * s * (1.0 - s);
                let dds = steepness * ds * (1.0 - 2.0 * s);
                Derivs {
                    value: low + (high - low) * s,
                    d1: (high - low) * ds,
                    d2: (high - low) * dds,
                }
            }
        }
    }

    /// Lower and upper bounds of σ over the real line.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            SigmaFamily::Constant { value } => (value, value),
            SigmaFamily::Logistic { low, high, .. } => (low.min(high), low.max(high)),
        }
    }

    /// ∫_{a}^{b} du / σ(u) in closed form.
    pub fn inverse_integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            SigmaFamily::Constant { value } => (b - a) / value,
            SigmaFamily::Logistic {
                low,
                high,
                steepness,
                center,
            } => {
                // 1/σ = 1/H + ((H − L)/H) / (H e^{w} + L),  w = k(u − c)
                let prim = |u: f64| {
                    let w = steepness * (u - center);
                    // w − ln(H e^{w} + L), arranged to avoid overflow
                    let tail = if w > 0.0 {
                        -(high + low * (-w).exp()).ln()
                    } else {
                        w - (high * w.exp() + low).ln()
                    };
                    u / high + (high - low) / (steepness * high * low) * tail
                };
                prim(b) - prim(a)
            }
        }
    }
}

fn logistic(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

/// Vol-of-vol α(y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaFamily {
    /// α(y) = nu · y^p
    Power { nu: f64, p: f64 },
}

impl AlphaFamily {
    pub fn kind(&self) -> &'static str {
        match self {
            AlphaFamily::Power { .. } => "alpha-power",
        }
    }

    pub fn eval(&self, y: f64) -> Derivs {
        match *self {
            AlphaFamily::Power { nu, p } => {
                if p == 1.0 {
                    return Derivs {
                        value: nu * y,
                        d1: nu,
                        d2: 0.0,
                    };
                }
                let yp = y.powf(p);
                Derivs {
                    value: nu * yp,
                    d1: nu * p * yp / y,
                    d2: nu * p * (p - 1.0) * yp / (y * y),
                }
            }
        }
    }

    /// Declared large-y behaviour `(B₁, p)` with α(y) ~ B₁ yᵖ.
    pub fn tail_constants(&self) -> (f64, f64) {
        match *self {
            AlphaFamily::Power { nu, p } => (nu, p),
        }
    }

    /// Small-y slope A₁ with α(y) ~ A₁ y, when α is linear at the origin.
    pub fn origin_slope(&self) -> Option<f64> {
        match *self {
            AlphaFamily::Power { nu, p: 1.0 } => Some(nu),
            AlphaFamily::Power { .. } => None,
        }
    }
}

/// Drift of the volatility factor μ(y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuFamily {
    Zero,
    /// μ(y) = (mu0 y − kappa y³) / (1 + y²)
    Rational {
        mu0: f64,
        kappa: f64,
    },
    /// μ(y) = (α(y)/2y)(yα′(y) − α(y)) − c y α(y); the drift that admits a
    /// gauge transform when ρ ≠ 0.
    Prop45 {
        c: f64,
    },
}

impl MuFamily {
    pub fn kind(&self) -> &'static str {
        match self {
            MuFamily::Zero => "mu-zero",
            MuFamily::Rational { .. } => "mu-rational",
            MuFamily::Prop45 { .. } => "mu-prop45",
        }
    }

    /// μ(y) and μ′(y); `alpha` is α evaluated at the same y.
    pub fn eval(&self, y: f64, alpha: Derivs) -> (f64, f64) {
        match *self {
            MuFamily::Zero => (0.0, 0.0),
            MuFamily::Rational { mu0, kappa } => {
                let den = 1.0 + y * y;
                let num = mu0 * y - kappa * y * y * y;
                let dnum = mu0 - 3.0 * kappa * y * y;
                (num / den, (dnum * den - num * 2.0 * y) / (den * den))
            }
            MuFamily::Prop45 { c } => {
                let Derivs {
                    value: a,
                    d1: da,
                    d2: dda,
                } = alpha;
                let mu = 0.5 * a * da - a * a / (2.0 * y) - c * y * a;
                let dmu = 0.5 * (da * da + a * dda)
                    - (2.0 * a * da * y - a * a) / (2.0 * y * y)
                    - c * (a + y * da);
                (mu, dmu)
            }
        }
    }

    /// Large-y mean-reversion constant κ with μ(y) ~ −κ y, where the family
    /// has one.
    pub fn tail_kappa(&self) -> f64 {
        match *self {
            MuFamily::Rational { kappa, .. } => kappa,
            _ => 0.0,
        }
    }
}

/// A validated model: coefficient families, correlation, jump intensity and
/// initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub sigma: SigmaFamily,
    pub alpha: AlphaFamily,
    pub mu: MuFamily,
    pub rho: f64,
    /// Jump-to-default intensity (per unit time).
    pub lambda: f64,
    /// Log initial forward.
    pub x0: f64,
    /// Initial volatility.
    pub y0: f64,
}

impl ModelSpec {
    /// Uncorrelated β = 1 SABR with vol-of-vol `nu`.
    pub fn sabr(y0: f64, nu: f64) -> Self {
        Self {
            sigma: SigmaFamily::Constant { value: 1.0 },
            alpha: AlphaFamily::Power { nu, p: 1.0 },
            mu: MuFamily::Zero,
            rho: 0.0,
            lambda: 0.0,
            x0: 0.0,
            y0,
        }
    }

    pub fn sigma(&self, x: f64) -> Derivs {
        self.sigma.eval(x)
    }

    pub fn alpha(&self, y: f64) -> Derivs {
        self.alpha.eval(y)
    }

    /// μ(y) and μ′(y).
    pub fn mu(&self, y: f64) -> (f64, f64) {
        self.mu.eval(y, self.alpha.eval(y))
    }

    pub fn rho_bar(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt()
    }

    pub fn s0(&self) -> f64 {
        self.x0.exp()
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn sigma_is_constant(&self) -> Option<f64> {
        match self.sigma {
            SigmaFamily::Constant { value } => Some(value),
            _ => None,
        }
    }

    /// Check every structural constraint on the model.
    pub fn validate(&self) -> Result<()> {
        match self.sigma {
            SigmaFamily::Constant { value } => positive("sigma.value", value)?,
            SigmaFamily::Logistic {
                low,
                high,
                steepness,
                center,
            } => {
                positive("sigma.low", low)?;
                positive("sigma.high", high)?;
                positive("sigma.steepness", steepness)?;
                finite("sigma.center", center)?;
            }
        }
        match self.alpha {
            AlphaFamily::Power { nu, p } => {
                positive("alpha.nu", nu)?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(out_of_range("alpha.p", p, "must lie in (0, 1]"));
                }
            }
        }
        match self.mu {
            MuFamily::Zero => {}
            MuFamily::Rational { mu0, kappa } => {
                non_negative("mu.mu0", mu0)?;
                non_negative("mu.kappa", kappa)?;
            }
            MuFamily::Prop45 { c } => finite("mu.c", c)?,
        }
        finite("model.x0", self.x0)?;
        positive("model.y0", self.y0)?;
        if !(self.rho > -1.0 && self.rho <= 0.0) {
            return Err(out_of_range("model.rho", self.rho, "must lie in (-1, 0]"));
        }
        if self.rho != 0.0 {
            if self.sigma_is_constant().is_none() {
                return Err(LsvError::InvalidInput(
                    "rho != 0 requires a constant sigma".into(),
                ));
            }
            if !matches!(self.mu, MuFamily::Prop45 { .. }) {
                return Err(LsvError::InvalidInput(
                    "rho != 0 requires the prop45 mu family".into(),
                ));
            }
        }
        non_negative("model.lambda", self.lambda)?;
        if self.lambda > 0.0 && (self.rho != 0.0 || self.sigma_is_constant() != Some(1.0)) {
            return Err(LsvError::InvalidInput(
                "lambda > 0 requires rho = 0 and a constant sigma equal to 1".into(),
            ));
        }
        Ok(())
    }
}

fn out_of_range(name: &str, value: f64, reason: &str) -> LsvError {
    LsvError::ParameterOutOfRange {
        name: name.into(),
        value,
        reason: reason.into(),
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(out_of_range(name, v, "must be finite"))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(out_of_range(name, v, "must be finite and > 0"))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(out_of_range(name, v, "must be finite and >= 0"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        (d1, d2)
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    proptest! {
        #[test]
        fn sigma_logistic_derivatives(x in -3.0f64..3.0, k in 0.5f64..4.0) {
            let fam = SigmaFamily::Logistic { low: 0.8, high: 1.3, steepness: k, center: 0.1 };
            let h = 1e-5;
            let (d1, _) = central(|u| fam.eval(u).value, x, h);
            let (d1b, _) = central(|u| fam.eval(u).d1, x, h);
            let e = fam.eval(x);
            prop_assert!(rel_close(e.d1, d1, 1e-6));
            prop_assert!(rel_close(e.d2, d1b, 1e-6));
        }

        #[test]
        fn alpha_power_derivatives(y in 0.05f64..20.0, p in 0.1f64..1.0) {
            let fam = AlphaFamily::Power { nu: 0.7, p };
            let h = 1e-5 * y;
            let (d1, _) = central(|u| fam.eval(u).value, y, h);
            let (d1b, _) = central(|u| fam.eval(u).d1, y, h);
            let e = fam.eval(y);
            prop_assert!(rel_close(e.d1, d1, 1e-6));
            prop_assert!(rel_close(e.d2, d1b, 1e-6));
        }

        #[test]
        fn mu_derivatives(y in 0.05f64..20.0, p in 0.2f64..1.0, c in -1.0f64..1.0) {
            let alpha = AlphaFamily::Power { nu: 1.3, p };
            for fam in [MuFamily::Rational { mu0: 0.4, kappa: 0.7 }, MuFamily::Prop45 { c }] {
                let h = 1e-5 * y;
                let (d1, _) = central(|u| fam.eval(u, alpha.eval(u)).0, y, h);
                let (_, dmu) = fam.eval(y, alpha.eval(y));
                prop_assert!(rel_close(dmu, d1, 1e-6), "{:?}: {} vs {}", fam, dmu, d1);
            }
        }

        #[test]
        fn logistic_inverse_integral_matches_quadrature(a in -2.0f64..0.0, b in 0.0f64..2.0) {
            let fam = SigmaFamily::Logistic { low: 0.6, high: 1.4, steepness: 3.0, center: 0.2 };
            let q = crate::numerics::integrate(|u| 1.0 / fam.eval(u).value, a, b,
                crate::numerics::QuadOptions::default()).unwrap().value;
            prop_assert!((fam.inverse_integral(a, b) - q).abs() < 1e-10);
        }
    }

    #[test]
    fn prop45_with_linear_alpha_and_zero_c_is_driftless() {
        let alpha = AlphaFamily::Power { nu: 1.7, p: 1.0 };
        let (mu, dmu) = MuFamily::Prop45 { c: 0.0 }.eval(0.3, alpha.eval(0.3));
        assert!(mu.abs() < 1e-15 && dmu.abs() < 1e-15);
    }

    #[test]
    fn validation_rules() {
        let sabr = ModelSpec::sabr(0.2, 1.0);
        assert!(sabr.validate().is_ok());

        let mut m = sabr;
        m.alpha = AlphaFamily::Power { nu: 1.0, p: 1.5 };
        assert!(matches!(
            m.validate(),
            Err(LsvError::ParameterOutOfRange { .. })
        ));

        let mut m = sabr;
        m.rho = -0.3;
        m.sigma = SigmaFamily::Logistic {
            low: 0.9,
            high: 1.1,
            steepness: 1.0,
            center: 0.0,
        };
        m.mu = MuFamily::Prop45 { c: 0.0 };
        assert!(m.validate().is_err());

        let mut m = sabr;
        m.rho = -0.3;
        assert!(m.validate().is_err(), "mu-zero is not the prop45 family");
        m.mu = MuFamily::Prop45 { c: 0.0 };
        assert!(m.validate().is_ok());

        let mut m = sabr;
        m.rho = 0.2;
        assert!(m.validate().is_err());

        let mut m = sabr.with_lambda(0.1);
        assert!(m.validate().is_ok());
        m.sigma = SigmaFamily::Constant { value: 0.5 };
        assert!(m.validate().is_err());
    }
}
