//! Adaptive fourth-order Magnus propagator for traceless 2x2 Hamiltonians.
//!
//! `H(t) = h(t) . sigma` is given by its Pauli vector. Each step applies the
//! exact exponential of the two-point Gauss-Legendre Magnus generator, so the
//! state stays normalized to rounding for any step size. The step size is
//! controlled by comparing one full step against two half steps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{Stats, Tolerances};

pub type State = [Complex64; 2];

const SQRT3: f64 = 1.732_050_807_568_877_2;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 4.0;
// local error of a step is O(h^5)
const ORDER_EXPONENT: f64 = 1.0 / 5.0;

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `exp(-i w . sigma) psi`.
fn rotate(w: [f64; 3], psi: &State) -> State {
    let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if theta == 0.0 {
        return *psi;
    }
    let (s, c) = theta.sin_cos();
    let n = [w[0] / theta, w[1] / theta, w[2] / theta];
    let i = Complex64::i();
    let sigma_psi = [
        n[2] * psi[0] + Complex64::new(n[0], -n[1]) * psi[1],
        Complex64::new(n[0], n[1]) * psi[0] - n[2] * psi[1],
    ];
    [c * psi[0] - i * s * sigma_psi[0], c * psi[1] - i * s * sigma_psi[1]]
}

fn magnus_step<H: Fn(f64) -> [f64; 3]>(h: &H, t: f64, dt: f64, psi: &State) -> State {
    let a = h(t + (0.5 - SQRT3 / 6.0) * dt);
    let b = h(t + (0.5 + SQRT3 / 6.0) * dt);
    let ab = cross(a, b);
    let k = SQRT3 / 6.0 * dt * dt;
    let w = [
        0.5 * dt * (a[0] + b[0]) - k * ab[0],
        0.5 * dt * (a[1] + b[1]) - k * ab[1],
        0.5 * dt * (a[2] + b[2]) - k * ab[2],
    ];
    rotate(w, psi)
}

fn error_norm(coarse: &State, fine: &State, tol: &Tolerances) -> f64 {
    let mut acc = 0.0;
    for (x, y) in coarse.iter().zip(fine) {
        for (p, q) in [(x.re, y.re), (x.im, y.im)] {
            let scale = tol.abs_tol + tol.rel_tol * p.abs().max(q.abs());
            acc += ((p - q) / scale).powi(2);
        }
    }
    (acc / 4.0).sqrt()
}

/// Solves `i d psi / dt = (h(t) . sigma) psi` from `t0` to `t1`.
///
/// `observe` sees every accepted `(t, psi)`.
pub fn propagate<H, O>(h: H, t0: f64, t1: f64, psi0: State, tol: &Tolerances, mut observe: O) -> Result<(State, Stats)>
where
    H: Fn(f64) -> [f64; 3],
    O: FnMut(f64, &State),
{
    let mut stats = Stats::default();
    let span = t1 - t0;
    if span < 0.0 {
        return Err(Error::invalid("propagation interval must be forward in time"));
    }
    if span == 0.0 {
        return Ok((psi0, stats));
    }

    let mut t = t0;
    let mut psi = psi0;
    let h0 = h(t0);
    let rate = (h0[0] * h0[0] + h0[1] * h0[1] + h0[2] * h0[2]).sqrt();
    let mut dt = if rate > 0.0 { (0.1 / rate).min(span) } else { span };

    loop {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::Integration {
                t,
                steps: stats.accepted + stats.rejected,
                reason: "maximum number of steps exceeded".into(),
            });
        }
        let last = t + dt >= t1;
        if last {
            dt = t1 - t;
        }
        if dt <= f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                steps: stats.accepted + stats.rejected,
                reason: format!("step size underflow (dt = {dt})"),
            });
        }

        let coarse = magnus_step(&h, t, dt, &psi);
        let half = magnus_step(&h, t, 0.5 * dt, &psi);
        let fine = magnus_step(&h, t + 0.5 * dt, 0.5 * dt, &half);
        stats.evaluations += 6;
        let err = error_norm(&coarse, &fine, tol);
        if !err.is_finite() {
            return Err(Error::Integration {
                t,
                steps: stats.accepted + stats.rejected,
                reason: "non-finite error estimate".into(),
            });
        }

        if err <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + dt };
            psi = fine;
            observe(t, &psi);
            if last {
                return Ok((psi, stats));
            }
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-ORDER_EXPONENT)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            dt *= factor;
        } else {
            stats.rejected += 1;
            dt *= (SAFETY * err.powf(-ORDER_EXPONENT)).clamp(MIN_FACTOR, 1.0);
        }
    }
}
