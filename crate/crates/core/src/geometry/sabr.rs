//! Closed forms for β = 1 SABR, α(y) = νy, ρ = 0, x₀ = 0.

use crate::error::{LsvError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SabrReference {
    pub y1_star: f64,
    pub d: f64,
    pub u0: f64,
    pub phi_second: f64,
    /// Work term A = −x₁/2.
    pub work: f64,
    pub a_sv: f64,
}

/// Closed-form geometry for SABR with vol-of-vol `nu`. With `D = νd`:
/// `y₁* = √(ν²x² + y₀²)`, `sinh D = νx/y₀`, `u₀ = (sinh D/D)^{−1/2}`,
/// `φ″ = D/(ν² y₀ y₁* sinh D)` and `A_SV = e^{x/2}√(y₀y₁*)/d²`.
pub fn sabr_reference(x1: f64, y0: f64, nu: f64) -> Result<SabrReference> {
    if !(x1 != 0.0 && x1.is_finite()) {
        return Err(LsvError::InvalidInput(format!(
            "x1 must be nonzero, got {x1}"
        )));
    }
    if !(y0 > 0.0 && nu > 0.0) {
        return Err(LsvError::InvalidInput(format!(
            "y0 and nu must be positive, got {y0}, {nu}"
        )));
    }
    let u = nu * x1 / y0;
    let big_d = u.abs().asinh();
    let d = big_d / nu;
    let y1_star = (nu * nu * x1 * x1 + y0 * y0).sqrt();
    let sinh_d = u.abs();
    Ok(SabrReference {
        y1_star,
        d,
        u0: (sinh_d / big_d).powf(-0.5),
        phi_second: big_d / (nu * nu * y0 * y1_star * sinh_d),
        work: -0.5 * x1,
        a_sv: (0.5 * x1).exp() * (y0 * y1_star).sqrt() / (d * d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let r = sabr_reference(0.2, 0.2, 1.0).unwrap();
        assert!((r.y1_star - 0.282843).abs() < 1e-6);
        assert!((r.d - 0.881374).abs() < 1e-6);
        assert_eq!(r.work, -0.1);
        assert!((r.phi_second - 15.5807).abs() < 1e-4);
        assert!((r.u0 - 0.938815).abs() < 1e-6);
        assert!((r.a_sv - 0.3383739179).abs() < 1e-9);
        assert!(sabr_reference(0.0, 0.2, 1.0).is_err());
    }
}
