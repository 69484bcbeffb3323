//! Independent pricing: Black–Scholes with zero rates, implied volatility
//! inversion, and a Monte Carlo simulator of the model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{LsvError, Result};
use crate::model::ModelSpec;

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Black–Scholes call with zero rates and dividends.
pub fn bs_price(s0: f64, strike: f64, t: f64, sigma: f64) -> f64 {
    let intrinsic = (s0 - strike).max(0.0);
    let v = sigma * t.sqrt();
    if !(v > 0.0) {
        return intrinsic;
    }
    if strike <= 0.0 {
        return s0 - strike;
    }
    let d1 = (s0 / strike).ln() / v + 0.5 * v;
    let d2 = d1 - v;
    (s0 * norm_cdf(d1) - strike * norm_cdf(d2)).max(intrinsic)
}

/// Black–Scholes put with zero rates.
pub fn bs_put(s0: f64, strike: f64, t: f64, sigma: f64) -> f64 {
    let v = sigma * t.sqrt();
    if !(v > 0.0) {
        return (strike - s0).max(0.0);
    }
    let d1 = (s0 / strike).ln() / v + 0.5 * v;
    let d2 = d1 - v;
    // direct form, parity cancels badly out of the money
    (strike * norm_cdf(-d2) - s0 * norm_cdf(-d1)).max(0.0)
}

/// ∂C/∂σ.
pub fn bs_vega(s0: f64, strike: f64, t: f64, sigma: f64) -> f64 {
    let v = sigma * t.sqrt();
    let d1 = (s0 / strike).ln() / v + 0.5 * v;
    s0 * norm_pdf(d1) * t.sqrt()
}

/// Black–Scholes implied volatility of a call price: bracketing and
/// bisection, then Newton.
pub fn implied_vol(price: f64, s0: f64, strike: f64, t: f64) -> Result<f64> {
    if !(s0 > 0.0 && strike > 0.0 && t > 0.0) {
        return Err(LsvError::InvalidInput(format!(
            "implied vol needs positive S0, K, t; got {s0}, {strike}, {t}"
        )));
    }
    let intrinsic = (s0 - strike).max(0.0);
    if !(price > intrinsic && price < s0) {
        return Err(LsvError::InvalidInput(format!(
            "price {price} outside the no-arbitrage interval ({intrinsic}, {s0})"
        )));
    }
    let f = |s: f64| bs_price(s0, strike, t, s) - price;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(LsvError::RootBracket(format!(
                "no volatility below {hi} reproduces price {price}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-4 * hi {
            break;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..100 {
        let r = f(s);
        if r.abs() < 1e-14 * s0 {
            return Ok(s);
        }
        if r < 0.0 {
            lo = lo.max(s);
        } else {
            hi = hi.min(s);
        }
        let vega = bs_vega(s0, strike, t, s);
        let mut next = s - r / vega;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 4.0 * f64::EPSILON * s {
            s = next;
            break;
        }
        s = next;
    }
    let r = f(s).abs();
    if r < 1e-12 * s0 {
        Ok(s)
    } else {
        Err(LsvError::Convergence(format!(
            "implied vol residual {r:e} for price {price}"
        )))
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MCConfig {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for MCConfig {
    fn default() -> Self {
        Self {
            paths: 100_000,
            steps: 200,
            seed: 1,
            antithetic: true,
        }
    }
}

impl MCConfig {
    fn validate(&self) -> Result<()> {
        if self.paths < 10_000 {
            return Err(LsvError::InvalidInput(format!(
                "need at least 10000 paths, got {}",
                self.paths
            )));
        }
        if self.steps < 16 {
            return Err(LsvError::InvalidInput(format!(
                "need at least 16 time steps, got {}",
                self.steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub price: f64,
    pub stderr: f64,
    /// Present iff the price lies strictly inside the no-arbitrage interval.
    pub implied_vol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

/// Paths per block; each block draws from its own ChaCha stream so the
/// result does not depend on how blocks are spread over threads.
const BLOCK: usize = 4096;

struct BlockSums {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    samples: usize,
}

/// Log-Euler scheme for `(ln S, ln Y)` driven by pre-drawn normals.
struct Simulator<'a> {
    model: &'a ModelSpec,
    dt: f64,
    sqrt_dt: f64,
    steps: usize,
    rho_bar: f64,
}

impl Simulator<'_> {
    fn terminal(&self, z: &[(f64, f64)], sign: f64) -> f64 {
        let m = self.model;
        let (mut x, mut ly) = (m.x0, m.y0.ln());
        for &(z1, zp) in z.iter().take(self.steps) {
            let (z1, zp) = (sign * z1, sign * zp);
            let z2 = m.rho * z1 + self.rho_bar * zp;
            let y = ly.exp();
            let s = m.sigma(x).value;
            let vol = s * y;
            x += (m.lambda - 0.5 * vol * vol) * self.dt + vol * self.sqrt_dt * z1;
            let a = m.alpha(y).value;
            let (mu, _) = m.mu(y);
            let ay = a / y;
            ly += (mu / y - 0.5 * ay * ay) * self.dt + ay * self.sqrt_dt * z2;
        }
        x
    }
}

/// Monte Carlo prices of European options at several strikes from one set
/// of paths. Calls are discounted analytically by `e^{−λt}` (default kills
/// the payoff); puts draw the default event pathwise and pay K on default.
pub fn mc_prices(
    model: &ModelSpec,
    strikes: &[f64],
    t: f64,
    kind: OptionKind,
    config: &MCConfig,
) -> Result<Vec<MCEstimate>> {
    config.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(LsvError::InvalidInput(format!("t must be > 0, got {t}")));
    }
    if strikes.is_empty() {
        return Err(LsvError::InvalidInput("empty strike list".into()));
    }
    if let Some(k) = strikes.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
        return Err(LsvError::InvalidInput(format!("invalid strike {k}")));
    }
    let sim = Simulator {
        model,
        dt: t / config.steps as f64,
        sqrt_dt: (t / config.steps as f64).sqrt(),
        steps: config.steps,
        rho_bar: model.rho_bar(),
    };
    let p_default = -(-model.lambda * t).exp_m1();
    let n_blocks = config.paths.div_ceil(BLOCK);

    let blocks: Vec<Result<BlockSums>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(b as u64);
            let n_paths = BLOCK.min(config.paths - b * BLOCK);
            let mut sums = BlockSums {
                sum: vec![0.0; strikes.len()],
                sum_sq: vec![0.0; strikes.len()],
                samples: 0,
            };
            let mut z = vec![(0.0, 0.0); config.steps];
            let payoff = |x: f64, u: f64, k: f64| -> f64 {
                let s = x.exp();
                match kind {
                    OptionKind::Call => (s - k).max(0.0),
                    OptionKind::Put if u < p_default => k,
                    OptionKind::Put => (k - s).max(0.0),
                }
            };
            let mut done = 0;
            while done < n_paths {
                for zi in z.iter_mut() {
                    *zi = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                }
                let u: f64 = rng.random();
                let x1 = sim.terminal(&z, 1.0);
                if !x1.is_finite() {
                    return Err(LsvError::Numerical(format!(
                        "non-finite path in block {b} after {done} paths"
                    )));
                }
                let x2 = if config.antithetic && done + 1 < n_paths {
                    Some(sim.terminal(&z, -1.0))
                } else {
                    None
                };
                for (i, &k) in strikes.iter().enumerate() {
                    let v = match x2 {
                        Some(x2) => 0.5 * (payoff(x1, u, k) + payoff(x2, 1.0 - u, k)),
                        None => payoff(x1, u, k),
                    };
                    sums.sum[i] += v;
                    sums.sum_sq[i] += v * v;
                }
                sums.samples += 1;
                done += if x2.is_some() { 2 } else { 1 };
            }
            Ok(sums)
        })
        .collect();

    let mut sum = vec![0.0; strikes.len()];
    let mut sum_sq = vec![0.0; strikes.len()];
    let mut n = 0usize;
    for b in blocks {
        let b = b?;
        for i in 0..strikes.len() {
            sum[i] += b.sum[i];
            sum_sq[i] += b.sum_sq[i];
        }
        n += b.samples;
    }
    let discount = match kind {
        OptionKind::Call => (-model.lambda * t).exp(),
        OptionKind::Put => 1.0,
    };
    let s0 = model.s0();
    Ok(strikes
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mean = sum[i] / n as f64;
            let var = ((sum_sq[i] / n as f64 - mean * mean) * n as f64 / (n as f64 - 1.0)).max(0.0);
            let price = discount * mean;
            let stderr = discount * (var / n as f64).sqrt();
            let call_equiv = match kind {
                OptionKind::Call => price,
                OptionKind::Put => price + s0 - k,
            };
            MCEstimate {
                price,
                stderr,
                implied_vol: implied_vol(call_equiv, s0, k, t).ok(),
            }
        })
        .collect())
}

/// Monte Carlo call price at one strike.
pub fn mc_price(model: &ModelSpec, strike: f64, t: f64, config: &MCConfig) -> Result<MCEstimate> {
    Ok(mc_prices(model, &[strike], t, OptionKind::Call, config)?[0])
}

/// Monte Carlo put price at one strike.
pub fn mc_put_price(
    model: &ModelSpec,
    strike: f64,
    t: f64,
    config: &MCConfig,
) -> Result<MCEstimate> {
    Ok(mc_prices(model, &[strike], t, OptionKind::Put, config)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bs_reference_values() {
        assert!((bs_price(1.0, 1.0, 1.0, 0.2) - 0.0796557).abs() < 1e-7);
        assert!((bs_price(1.0, 1.0, 1.0, 0.2) - (2.0 * norm_cdf(0.1) - 1.0)).abs() < 1e-15);
        assert_eq!(bs_price(1.0, 0.9, 1.0, 0.0), 1.0 - 0.9);
        assert_eq!(bs_price(1.0, 1.1, 1.0, 0.0), 0.0);
        let (c, p) = (bs_price(1.0, 1.1, 0.5, 0.3), bs_put(1.0, 1.1, 0.5, 0.3));
        assert!((c - p - (1.0 - 1.1)).abs() < 1e-15);
    }

    #[test]
    fn implied_vol_rejects_out_of_range() {
        assert!(implied_vol(0.05, 1.0, 0.9, 1.0).is_err());
        assert!(implied_vol(1.0, 1.0, 0.9, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn implied_vol_round_trip(s in 0.05f64..1.5, lk in -0.5f64..0.5, t in 0.01f64..2.0) {
            let k = lk.exp();
            let p = bs_price(1.0, k, t, s);
            prop_assume!(p > (1.0 - k).max(0.0) + 1e-12 && p < 1.0 - 1e-12);
            let iv = implied_vol(p, 1.0, k, t).unwrap();
            prop_assert!((bs_price(1.0, k, t, iv) - p).abs() < 1e-10);
        }

        #[test]
        fn bs_monotone_in_sigma(s in 0.05f64..1.0, lk in -0.5f64..0.5) {
            let k = lk.exp();
            let (lo, hi) = (bs_price(1.0, k, 0.5, s), bs_price(1.0, k, 0.5, s * 1.01));
            prop_assert!(hi >= lo);
            if lo - (1.0 - k).max(0.0) > 1e-12 {
                prop_assert!(hi > lo);
            }
        }
    }

    fn small() -> MCConfig {
        MCConfig {
            paths: 20_000,
            steps: 16,
            seed: 7,
            antithetic: true,
        }
    }

    #[test]
    fn config_limits() {
        let m = ModelSpec::sabr(0.2, 1.0);
        let mut c = small();
        c.paths = 100;
        assert!(mc_price(&m, 1.0, 0.1, &c).is_err());
        let mut c = small();
        c.steps = 8;
        assert!(mc_price(&m, 1.0, 0.1, &c).is_err());
        assert!(mc_prices(&m, &[], 0.1, OptionKind::Call, &small()).is_err());
    }

    #[test]
    fn martingale() {
        let m = ModelSpec::sabr(0.2, 1.0);
        let e = mc_price(&m, 0.0, 0.1, &small()).unwrap();
        assert!((e.price - 1.0).abs() < 3.0 * e.stderr, "{e:?}");
        assert!(e.implied_vol.is_none());
    }

    #[test]
    fn seed_determinism() {
        let m = ModelSpec::sabr(0.2, 1.0);
        let a = mc_price(&m, 1.05, 0.1, &small()).unwrap();
        let b = mc_price(&m, 1.05, 0.1, &small()).unwrap();
        assert_eq!(a, b);
        let mut c = small();
        c.seed = 8;
        assert_ne!(mc_price(&m, 1.05, 0.1, &c).unwrap(), a);
    }

    #[test]
    fn degenerate_vol_of_vol_is_black_scholes() {
        let mut m = ModelSpec::sabr(0.25, 1e-6);
        m.sigma = crate::model::SigmaFamily::Constant { value: 0.8 };
        let e = mc_price(&m, 1.05, 0.5, &small()).unwrap();
        let iv = e.implied_vol.unwrap();
        let bs = bs_price(1.0, 1.05, 0.5, 0.2);
        assert!((e.price - bs).abs() < 3.0 * e.stderr);
        assert!((iv - 0.2).abs() < 3e-3, "{iv}");
    }
}
