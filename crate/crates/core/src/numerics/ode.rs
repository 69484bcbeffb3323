//! Dormand–Prince 5(4) integrator with step-size control.
//!
//! States are fixed-size arrays; the geodesic system uses `N = 4`
//! (position and velocity).

use crate::error::{LsvError, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_steps: 200_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error weights: 5th order minus embedded 4th order
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Adaptive integrator that remembers its last accepted step size, so
/// consecutive calls over adjacent intervals do not restart from scratch.
pub struct DormandPrince<F, const N: usize> {
    rhs: F,
    opts: OdeOptions,
    h: Option<f64>,
    pub steps: usize,
}

impl<F, const N: usize> DormandPrince<F, N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(rhs: F, opts: OdeOptions) -> Self {
        Self {
            rhs,
            opts,
            h: None,
            steps: 0,
        }
    }

    fn error_norm(&self, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let scale = self.opts.abs_tol + self.opts.rel_tol * y[i].abs().max(y_new[i].abs());
            let r = err[i] / scale;
            acc += r * r;
        }
        (acc / N as f64).sqrt()
    }

    /// Advance from `(t0, y0)` to `t1` and return the state at `t1`.
    pub fn advance(&mut self, t0: f64, y0: [f64; N], t1: f64) -> Result<[f64; N]> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        let mut h = self
            .h
            .unwrap_or_else(|| 1e-3 * span.abs().max(1e-6))
            .abs()
            .min(span.abs());
        let mut k1 = (self.rhs)(t, &y);
        let mut local_steps = 0usize;

        while (t1 - t) * dir > 0.0 {
            if local_steps > self.opts.max_steps {
                return Err(LsvError::Convergence(format!(
                    "ODE integrator exceeded {} steps at t = {t}",
                    self.opts.max_steps
                )));
            }
            let remaining = (t1 - t).abs();
            let last = h >= remaining;
            let step = if last { remaining } else { h } * dir;

            let k2 = (self.rhs)(t + C2 * step, &axpy(&y, step, &[(A21, &k1)]));
            let k3 = (self.rhs)(t + C3 * step, &axpy(&y, step, &[(A31, &k1), (A32, &k2)]));
            let k4 = (self.rhs)(
                t + C4 * step,
                &axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = (self.rhs)(
                t + C5 * step,
                &axpy(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = (self.rhs)(
                t + step,
                &axpy(
                    &y,
                    step,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = axpy(
                &y,
                step,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = (self.rhs)(t + step, &y_new);
            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let norm = self.error_norm(&y, &y_new, &err);
            if !norm.is_finite() {
                h *= 0.25;
                if h < 1e-14 * span.abs() {
                    return Err(LsvError::Convergence(format!(
                        "ODE right-hand side became non-finite near t = {t}"
                    )));
                }
                continue;
            }
            local_steps += 1;
            if norm <= 1.0 {
                t = if last { t1 } else { t + step };
                y = y_new;
                k1 = k7;
                self.steps += 1;
                let factor = if norm == 0.0 {
                    5.0
                } else {
                    (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a truncated final step says nothing about the natural step size
                if !last {
                    h = step.abs() * factor;
                } else {
                    h = h.max(step.abs() * factor);
                }
            } else {
                h = step.abs() * (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-14 * span.abs().max(1e-300) {
                    return Err(LsvError::Convergence(format!(
                        "ODE step size underflow near t = {t}"
                    )));
                }
            }
        }
        self.h = Some(h);
        Ok(y)
    }

    /// Integrate over `[t0, t1]`, returning `n_intervals + 1` states at
    /// uniformly spaced times (endpoints included).
    pub fn sample(
        &mut self,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        n_intervals: usize,
    ) -> Result<Vec<(f64, [f64; N])>> {
        let mut out = Vec::with_capacity(n_intervals + 1);
        out.push((t0, y0));
        let mut y = y0;
        for i in 1..=n_intervals {
            let ta = t0 + (t1 - t0) * (i - 1) as f64 / n_intervals as f64;
            let tb = if i == n_intervals {
                t1
            } else {
                t0 + (t1 - t0) * i as f64 / n_intervals as f64
            };
            y = self.advance(ta, y, tb)?;
            out.push((tb, y));
        }
        Ok(out)
    }
}
