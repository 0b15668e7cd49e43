//! Cumulants of the defect-pair number.
//!
//! Closed forms hold for sudden quenches that start exactly at the critical
//! field (`g_i = -1`) and end at `g_f` in `[-1, 0]`, in the continuum limit
//! where `sum_k -> (L / 2 pi) int_0^pi dk`. The depth is `eps_f = 1 + g_f`.
//!
//! The closed forms for the first and third cumulant contain
//! `arcsin(2 sqrt(-g) / (1 - g)) / sqrt(-g)`, which is `0/0` at `g = 0`. Close
//! to zero field both are evaluated from the power series of
//! `arctan(sqrt z) / sqrt z` in `z = -g` instead (note
//! `arcsin(2 s / (1 + s^2)) = 2 arctan s` for `s <= 1`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `|g_f|` the closed forms switch to their series evaluation.
pub const SMALL_FIELD: f64 = 0.05;

const ATAN_SERIES_TERMS: usize = 30;

/// Tolerance on the arccos argument leaving `[-1, 1]` by rounding.
const ARCCOS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Pairs,
    Kinks,
}

/// First three cumulants in either the pair or the kink convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantTriple {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub convention: Convention,
}

impl CumulantTriple {
    pub fn pairs(kappa1: f64, kappa2: f64, kappa3: f64) -> Self {
        Self {
            kappa1,
            kappa2,
            kappa3,
            convention: Convention::Pairs,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.kappa1, self.kappa2, self.kappa3]
    }

    /// Kinks are twice the pairs, so `kappa_q -> 2^q kappa_q`.
    pub fn to_kinks(&self) -> Result<Self> {
        if self.convention == Convention::Kinks {
            return Err(Error::AlreadyKinks);
        }
        Ok(Self {
            kappa1: 2.0 * self.kappa1,
            kappa2: 4.0 * self.kappa2,
            kappa3: 8.0 * self.kappa3,
            convention: Convention::Kinks,
        })
    }

    /// `(kappa2 / kappa1, kappa3 / kappa1)` of this triple.
    ///
    /// For kinks expressed through pair cumulants these are
    /// `(2 kappa2 / kappa1, 4 kappa3 / kappa1)`.
    pub fn ratios(&self) -> Result<(f64, f64)> {
        if !(self.kappa1 > 0.0) {
            return Err(Error::UndefinedRatio(self.kappa1));
        }
        Ok((self.kappa2 / self.kappa1, self.kappa3 / self.kappa1))
    }
}

/// Coefficient `rational + pi_multiple * pi`.
#[derive(Debug, Clone, Copy)]
struct PiAffine {
    rational: f64,
    pi_multiple: f64,
}

impl PiAffine {
    const fn new(rational: f64, pi_multiple: f64) -> Self {
        Self { rational, pi_multiple }
    }

    fn value(self) -> f64 {
        self.rational + self.pi_multiple * PI
    }
}

/// `kappa1 = (L / 4 pi) sum_n c_n eps^n`
const KAPPA1_EPS_SERIES: [PiAffine; 5] = [
    PiAffine::new(1.0, 0.0),
    PiAffine::new(1.0 / 2.0, -1.0 / 8.0),
    PiAffine::new(5.0 / 12.0, -1.0 / 8.0),
    PiAffine::new(3.0 / 8.0, -15.0 / 128.0),
    PiAffine::new(83.0 / 240.0, -7.0 / 64.0),
];

/// `kappa3 = (L / 8 pi) sum_n c_n eps^n`
const KAPPA3_EPS_SERIES: [PiAffine; 5] = [
    PiAffine::new(1.0, 0.0),
    PiAffine::new(1.0 / 2.0, -1.0 / 4.0),
    PiAffine::new(3.0 / 4.0, -1.0 / 4.0),
    PiAffine::new(7.0 / 8.0, -9.0 / 32.0),
    PiAffine::new(47.0 / 48.0, -5.0 / 16.0),
];

/// Series coefficients of `kappa1 / L` in powers of `eps_f`, lowest first.
pub fn kappa1_series_coefficients() -> [f64; 5] {
    KAPPA1_EPS_SERIES.map(|c| c.value() / (4.0 * PI))
}

/// Series coefficients of `kappa3 / L` in powers of `eps_f`, lowest first.
pub fn kappa3_series_coefficients() -> [f64; 5] {
    KAPPA3_EPS_SERIES.map(|c| c.value() / (8.0 * PI))
}

fn check_field(quantity: &'static str, g_f: f64) -> Result<()> {
    if g_f > 0.0 {
        return Err(Error::Domain {
            quantity,
            detail: format!("closed form valid for g_f <= 0, got {g_f}"),
        });
    }
    if !(g_f >= -1.0) {
        return Err(Error::Domain {
            quantity,
            detail: format!("closed form needs g_f >= -1, got {g_f}"),
        });
    }
    Ok(())
}

fn check_depth(eps_f: f64, order: usize) -> Result<()> {
    if !(1..=5).contains(&order) {
        return Err(Error::invalid(format!("series order must be 1..=5, got {order}")));
    }
    if !(0.0..=1.0).contains(&eps_f) {
        return Err(Error::invalid(format!("eps_f must lie in [0, 1], got {eps_f}")));
    }
    Ok(())
}

/// Coefficients of `arctan(sqrt z) / sqrt z = sum_n (-1)^n z^n / (2n + 1)`.
fn atan_ratio_coefficients() -> [f64; ATAN_SERIES_TERMS] {
    std::array::from_fn(|n| {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign / (2 * n + 1) as f64
    })
}

fn horner(coeffs: &[f64], z: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
}

fn atan_ratio(z: f64) -> f64 {
    horner(&atan_ratio_coefficients(), z)
}

/// `[(1 - z^2) - (1 + z)^3 arctan(sqrt z)/sqrt z] / z` as a power series.
fn kappa3_remainder(z: f64) -> f64 {
    let c = atan_ratio_coefficients();
    let at = |i: isize| if i >= 0 { c[i as usize] } else { 0.0 };
    let mut e = [0.0; ATAN_SERIES_TERMS];
    for (n, en) in e.iter_mut().enumerate() {
        let i = n as isize;
        let d = at(i) + 3.0 * at(i - 1) + 3.0 * at(i - 2) + at(i - 3);
        let poly = match n {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        };
        *en = poly - d;
    }
    // e[0] vanishes identically; divide by z
    horner(&e[1..], z)
}

fn kappa1_small_field(l: f64, g_f: f64) -> f64 {
    let z = -g_f;
    l / 4.0 - l / (2.0 * PI) * (1.0 + z) * atan_ratio(z)
}

fn kappa1_closed_form(l: f64, g_f: f64) -> f64 {
    let s = (-g_f).sqrt();
    let arg = (2.0 * s / (1.0 - g_f)).min(1.0);
    l / 4.0 - l / (4.0 * PI) * (1.0 - g_f) * arg.asin() / s
}

fn kappa3_small_field(l: f64, g_f: f64) -> f64 {
    let z = -g_f;
    l / (4.0 * PI) * (1.0 + z) * atan_ratio(z) + l / (16.0 * PI) * kappa3_remainder(z)
}

fn kappa3_closed_form(l: f64, g_f: f64) -> Result<f64> {
    let s = (-g_f).sqrt();
    let asin_arg = (2.0 * s / (1.0 - g_f)).min(1.0);
    let mut acos_arg = (g_f * g_f + 6.0 * g_f + 1.0) / (1.0 - g_f).powi(2);
    if acos_arg.abs() > 1.0 {
        if acos_arg.abs() > 1.0 + ARCCOS_SLACK {
            return Err(Error::Consistency(format!(
                "arccos argument {acos_arg} outside [-1, 1] at g_f = {g_f}"
            )));
        }
        acos_arg = acos_arg.clamp(-1.0, 1.0);
    }
    let first = l / (8.0 * PI) * (1.0 - g_f) * asin_arg.asin() / s;
    let second = l / (64.0 * PI)
        * (acos_arg.acos() * (g_f - 1.0).powi(3) / (-g_f.powi(3)).sqrt() - 4.0 * (1.0 - g_f * g_f) / g_f);
    Ok(first + second)
}

/// Mean pair number for a sudden quench `-1 -> g_f`.
pub fn kappa1_exact(l: f64, g_f: f64) -> Result<f64> {
    check_field("kappa1", g_f)?;
    if g_f.abs() < SMALL_FIELD {
        Ok(kappa1_small_field(l, g_f))
    } else {
        Ok(kappa1_closed_form(l, g_f))
    }
}

/// Partial sum of the depth expansion of `kappa1` up to `eps^order`.
pub fn kappa1_series(l: f64, eps_f: f64, order: usize) -> Result<f64> {
    check_depth(eps_f, order)?;
    Ok(partial_sum(&KAPPA1_EPS_SERIES[..order], eps_f) * l / (4.0 * PI))
}

/// `kappa2 = (L / 16) (1 + g_f)`, exactly linear in the depth.
pub fn kappa2_exact(l: f64, g_f: f64) -> f64 {
    l / 16.0 * (1.0 + g_f)
}

pub fn kappa3_exact(l: f64, g_f: f64) -> Result<f64> {
    check_field("kappa3", g_f)?;
    if g_f.abs() < SMALL_FIELD {
        Ok(kappa3_small_field(l, g_f))
    } else {
        kappa3_closed_form(l, g_f)
    }
}

pub fn kappa3_series(l: f64, eps_f: f64, order: usize) -> Result<f64> {
    check_depth(eps_f, order)?;
    Ok(partial_sum(&KAPPA3_EPS_SERIES[..order], eps_f) * l / (8.0 * PI))
}

fn partial_sum(coeffs: &[PiAffine], eps: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| c.value() * eps.powi(n as i32 + 1))
        .sum()
}

/// All three closed-form pair cumulants at `g_f`.
pub fn exact_triple(l: f64, g_f: f64) -> Result<CumulantTriple> {
    Ok(CumulantTriple::pairs(
        kappa1_exact(l, g_f)?,
        kappa2_exact(l, g_f),
        kappa3_exact(l, g_f)?,
    ))
}

/// Slow-driving excitation ansatz `exp(-pi q sqrt(3 tau_q / 2))`.
///
/// `q` is the momentum measured from the gap-closing point, i.e. `pi - k` in
/// this crate's sign convention.
pub fn pk_exponential_ansatz(q: f64, tau_q: f64) -> f64 {
    (-PI * q * (1.5 * tau_q).sqrt()).exp()
}

/// Decay constant of the ansatz per unit `q sqrt(tau_q)`: `pi sqrt(3/2)`.
pub fn ansatz_decay_per_sqrt_tau() -> f64 {
    PI * 1.5_f64.sqrt()
}

/// `kappa_q ~ L (6 pi^4 tau_q)^(-1/2) / q` in the slow-driving limit.
pub fn kappa_slow_approx(l: f64, tau_q: f64, q: u32) -> Result<f64> {
    if !(1..=3).contains(&q) {
        return Err(Error::invalid(format!("cumulant order must be 1..=3, got {q}")));
    }
    if !(tau_q > 0.0) {
        return Err(Error::invalid(format!("tau_q must be positive, got {tau_q}")));
    }
    Ok(l / (6.0 * PI.powi(4) * tau_q).sqrt() / f64::from(q))
}
