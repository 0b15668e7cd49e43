//! Dormand-Prince 5(4) integrator with adaptive step control.
//!
//! General-purpose and not norm-preserving. Mode evolution uses
//! [`crate::propagator`]; this integrator serves as its independent reference.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
// PI controller exponents (Hairer & Wanner, order 5)
const ALPHA: f64 = 0.7 / 5.0;
const BETA: f64 = 0.4 / 5.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (`t1 >= t0`).
///
/// `observe` is called after every accepted step with the new `(t, y)`.
pub fn integrate<const N: usize, F, O>(
    f: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    tol: &Tolerances,
    mut observe: O,
) -> Result<([f64; N], Stats)>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]),
{
    let mut stats = Stats::default();
    let span = t1 - t0;
    if span < 0.0 {
        return Err(Error::invalid("integration interval must be forward in time"));
    }
    if span == 0.0 {
        return Ok((y0, stats));
    }

    let err_norm = |y: &[f64; N], y_new: &[f64; N], e: &[f64; N]| -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let scale = tol.abs_tol + tol.rel_tol * y[i].abs().max(y_new[i].abs());
            acc += (e[i] / scale).powi(2);
        }
        (acc / N as f64).sqrt()
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.evaluations += 1;

    // initial step from the derivative scale
    let d0 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d1 = k1.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut h = if d1 > 0.0 {
        0.01 * d0.max(1e-5) / d1
    } else {
        span * 1e-3
    };
    h = h.clamp(span * 1e-12, span);
    let mut prev_err: f64 = 1e-4;

    loop {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::Integration {
                t,
                steps: stats.accepted + stats.rejected,
                reason: "maximum number of steps exceeded".into(),
            });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                steps: stats.accepted + stats.rejected,
                reason: format!("step size underflow (h = {h})"),
            });
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if last { t1 } else { t + h };
        let k7 = f(t_new, &y_new);
        stats.evaluations += 6;

        let mut e = [0.0; N];
        for i in 0..N {
            e[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = err_norm(&y, &y_new, &e);
        if !err.is_finite() {
            return Err(Error::Integration {
                t,
                steps: stats.accepted + stats.rejected,
                reason: "non-finite error estimate".into(),
            });
        }

        if err <= 1.0 {
            stats.accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k7;
            observe(t, &y);
            if last {
                return Ok((y, stats));
            }
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-ALPHA) * prev_err.powf(BETA)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            prev_err = err.max(1e-4);
            h *= factor;
        } else {
            stats.rejected += 1;
            h *= (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tight() -> Tolerances {
        Tolerances {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn exponential_decay() {
        let (y, _) = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, 3.0, [1.0], &tight(), |_, _| {}).unwrap();
        assert_abs_diff_eq!(y[0], (-3.0f64).exp(), epsilon = 1e-11);
    }

    #[test]
    fn harmonic_oscillator_many_periods() {
        let t1 = 20.0 * std::f64::consts::PI;
        let (y, stats) = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            t1,
            [1.0, 0.0],
            &tight(),
            |_, _| {},
        )
        .unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(y[1], 0.0, epsilon = 1e-8);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = t y, y(0) = 1 -> exp(t^2/2)
        let (y, _) = integrate(|t, y: &[f64; 1]| [t * y[0]], 0.0, 2.0, [1.0], &tight(), |_, _| {}).unwrap();
        assert_abs_diff_eq!(y[0], 2f64.exp(), epsilon = 1e-9);
    }

    #[test]
    fn error_shrinks_with_tolerance() {
        let run = |rtol: f64| {
            let tol = Tolerances {
                rel_tol: rtol,
                abs_tol: rtol * 1e-2,
                max_steps: 1_000_000,
            };
            let (y, _) = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, 10.0, [1.0, 0.0], &tol, |_, _| {}).unwrap();
            (y[0] - 10f64.cos()).abs()
        };
        assert!(run(1e-10) < run(1e-6));
    }

    #[test]
    fn step_limit_reported() {
        let tol = Tolerances {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_steps: 5,
        };
        let r = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, 100.0, [1.0, 0.0], &tol, |_, _| {});
        assert!(matches!(r, Err(Error::Integration { .. })));
    }

    #[test]
    fn zero_span_is_identity() {
        let (y, s) = integrate(|_, y: &[f64; 1]| [y[0]], 1.0, 1.0, [2.0], &tight(), |_, _| {}).unwrap();
        assert_eq!(y, [2.0]);
        assert_eq!(s.accepted, 0);
    }
}
