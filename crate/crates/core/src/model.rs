//! Core domain types shared by every other module.
//!
//! The chain has `N` sites with periodic boundaries (`L = N`, unit lattice
//! spacing). Each positive momentum `k` carries a 2x2 problem
//!
//! ```text
//! H_k(g) = s * [ (g - cos k) sigma_z + sin k sigma_x ],   s = 2
//! ```
//!
//! whose gap is `eps_k(g) = 2 sqrt(1 + g^2 - 2 g cos k)`. With this sign
//! convention the critical field is `g_c = -1` and the gap closes at `k = pi`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Critical transverse field of the chain in this sign convention.
pub const G_CRITICAL: f64 = -1.0;

/// Positive quantized momenta `k_m = (2m - 1) pi / N`, `m = 1..=N/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    n_sites: usize,
    momenta: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites < 2 || !n_sites.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "number of sites must be even and at least 2, got {n_sites}"
            )));
        }
        let n = n_sites as f64;
        let momenta = (1..=n_sites / 2).map(|m| (2 * m - 1) as f64 * PI / n).collect();
        Ok(Self { n_sites, momenta })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// System length `L`, identical to the number of sites.
    pub fn length(&self) -> f64 {
        self.n_sites as f64
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.momenta.iter().copied()
    }

    /// Distance of each momentum from the gap-closing point `k = pi`.
    pub fn distances_from_gap_closing(&self) -> Vec<f64> {
        self.momenta.iter().map(|k| PI - k).collect()
    }
}

/// Linear ramp `g(t) = g_initial + t / tau_q` from `g_initial` to `g_final`.
///
/// `tau_q = 0` is the sudden quench and is never integrated in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchProtocol {
    g_initial: f64,
    g_final: f64,
    tau_q: f64,
}

impl QuenchProtocol {
    /// Upward ramps only. A sudden protocol may have `g_final == g_initial`
    /// (no quench at all); a timed ramp needs `g_final > g_initial`.
    pub fn new(g_initial: f64, g_final: f64, tau_q: f64) -> Result<Self> {
        if !(g_initial.is_finite() && g_final.is_finite() && tau_q.is_finite()) {
            return Err(Error::invalid("protocol parameters must be finite"));
        }
        if tau_q < 0.0 {
            return Err(Error::invalid(format!("tau_q must be >= 0, got {tau_q}")));
        }
        let upward = if tau_q == 0.0 {
            g_final >= g_initial
        } else {
            g_final > g_initial
        };
        if !upward {
            return Err(Error::invalid(format!(
                "ramp must increase the field: g_initial = {g_initial}, g_final = {g_final}"
            )));
        }
        Ok(Self {
            g_initial,
            g_final,
            tau_q,
        })
    }

    pub fn sudden(g_initial: f64, g_final: f64) -> Result<Self> {
        Self::new(g_initial, g_final, 0.0)
    }

    pub fn g_initial(&self) -> f64 {
        self.g_initial
    }

    pub fn g_final(&self) -> f64 {
        self.g_final
    }

    pub fn tau_q(&self) -> f64 {
        self.tau_q
    }

    pub fn is_sudden(&self) -> bool {
        self.tau_q == 0.0
    }

    /// Quench depth measured from the critical point, `g_final - g_c`.
    pub fn epsilon_final(&self) -> f64 {
        self.g_final - G_CRITICAL
    }

    /// Ramp duration `(g_final - g_initial) * tau_q`.
    pub fn duration(&self) -> f64 {
        (self.g_final - self.g_initial) * self.tau_q
    }

    pub fn field_at(&self, t: f64) -> Result<f64> {
        if self.is_sudden() {
            return Err(Error::SuddenProtocol);
        }
        let end = self.duration();
        // allow a few ulps of overshoot from accumulated step sizes
        let slack = 4.0 * f64::EPSILON * end.max(1.0);
        if !(t >= 0.0 && t <= end + slack) {
            return Err(Error::invalid(format!("time {t} outside ramp window [0, {end}]")));
        }
        if t >= end {
            return Ok(self.g_final);
        }
        Ok(self.g_initial + t / self.tau_q)
    }
}

/// Single-mode Hamiltonian `scale * [(g - cos k) sigma_z + sin k sigma_x]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeHamiltonian {
    k: f64,
    energy_scale: f64,
}

impl ModeHamiltonian {
    /// Prefactor giving the scaled matrix the eigenvalues `+-eps_k(g)`.
    pub const ENERGY_SCALE: f64 = 2.0;

    pub fn new(k: f64) -> Self {
        Self::with_energy_scale(k, Self::ENERGY_SCALE)
    }

    pub fn with_energy_scale(k: f64, energy_scale: f64) -> Self {
        Self { k, energy_scale }
    }

    pub fn momentum(&self) -> f64 {
        self.k
    }

    pub fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    /// Unscaled `(z, x)` coefficients `(g - cos k, sin k)`.
    pub fn coefficients(&self, g: f64) -> (f64, f64) {
        (g - self.k.cos(), self.k.sin())
    }

    /// Scaled coefficients entering the time evolution.
    pub fn scaled_coefficients(&self, g: f64) -> (f64, f64) {
        let (z, x) = self.coefficients(g);
        (self.energy_scale * z, self.energy_scale * x)
    }

    /// Positive eigenvalue of the scaled matrix.
    pub fn level(&self, g: f64) -> f64 {
        self.energy_scale * half_gap(self.k, g)
    }
}

/// `sqrt(1 + g^2 - 2 g cos k)`, clamped against tiny negative rounding.
pub(crate) fn half_gap(k: f64, g: f64) -> f64 {
    let (z, x) = (g - k.cos(), k.sin());
    (z * z + x * x).max(0.0).sqrt()
}
