//! Time evolution of single modes under the linear ramp.
//!
//! `i d psi / dt = H_k(g(t)) psi` is solved with the unitary Magnus
//! propagator, so norm drift stays at the rounding level.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModeHamiltonian, MomentumGrid, QuenchProtocol};
use crate::ode::{Stats, Tolerances};
use crate::par::{self, Execution};
use crate::propagator;
use crate::spectral::{self, ExcitationProfile, ProfileSource};

/// Largest tolerated deviation of `|psi|^2` from one.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Probabilities may leave `[0, 1]` by at most this much before clamping.
pub const OVERSHOOT_TOLERANCE: f64 = 1e-9;

/// Below this quench time the analytic sudden path is the better reference.
pub const SUDDEN_WARN_TAU: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Prefactor of the mode matrix; only changed by mutation tests.
    pub energy_scale: f64,
    pub execution: Execution,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 10_000_000,
            energy_scale: ModeHamiltonian::ENERGY_SCALE,
            execution: Execution::default(),
        }
    }
}

impl EvolutionSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::invalid(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be positive"));
        }
        if !(self.energy_scale > 0.0 && self.energy_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "energy scale must be positive, got {}",
                self.energy_scale
            )));
        }
        Ok(())
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexSpinor {
    pub up: Complex64,
    pub down: Complex64,
}

impl ComplexSpinor {
    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    /// `|<v|psi>|^2` for a real spinor `v`.
    pub fn overlap_sqr(&self, v: &spectral::Spinor) -> f64 {
        (self.up * v.up + self.down * v.down).norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEvolution {
    pub state: ComplexSpinor,
    pub stats: Stats,
    /// Largest `| |psi|^2 - 1 |` seen over the accepted steps.
    pub max_norm_drift: f64,
}

fn norm_drift(psi: &propagator::State) -> f64 {
    (psi[0].norm_sqr() + psi[1].norm_sqr() - 1.0).abs()
}

pub fn evolve_mode(k: f64, protocol: &QuenchProtocol, settings: &EvolutionSettings) -> Result<ModeEvolution> {
    if protocol.is_sudden() {
        return Err(Error::SuddenProtocol);
    }
    settings.validate()?;
    let gs = spectral::ground_state(k, protocol.g_initial())?;
    let h = ModeHamiltonian::with_energy_scale(k, settings.energy_scale);
    let (g0, tau) = (protocol.g_initial(), protocol.tau_q());

    // the ramp is affine in t; field_at would add a fallible bounds check per call
    let pauli = |t: f64| {
        let (z, x) = h.scaled_coefficients(g0 + t / tau);
        [x, 0.0, z]
    };
    let mut drift: f64 = 0.0;
    let psi0 = [Complex64::new(gs.up, 0.0), Complex64::new(gs.down, 0.0)];
    let (psi, stats) = propagator::propagate(pauli, 0.0, protocol.duration(), psi0, &settings.tolerances(), |_, p| {
        drift = drift.max(norm_drift(p));
    })?;
    if drift > NORM_TOLERANCE {
        return Err(Error::Consistency(format!(
            "norm drift {drift:.3e} exceeds {NORM_TOLERANCE:e} at k = {k}"
        )));
    }
    Ok(ModeEvolution {
        state: ComplexSpinor {
            up: psi[0],
            down: psi[1],
        },
        stats,
        max_norm_drift: drift,
    })
}

/// `|<ES_k(g_final)|psi_final>|^2` after the ramp.
pub fn transition_probability(k: f64, protocol: &QuenchProtocol, settings: &EvolutionSettings) -> Result<f64> {
    if protocol.tau_q() > 0.0 && protocol.tau_q() < SUDDEN_WARN_TAU {
        log::warn!(
            "tau_q = {} is deep in the sudden regime; prefer the analytic sudden path",
            protocol.tau_q()
        );
    }
    let evolution = evolve_mode(k, protocol, settings)?;
    let es = spectral::excited_state(k, protocol.g_final())?;
    let p = evolution.state.overlap_sqr(&es);
    if !(-OVERSHOOT_TOLERANCE..=1.0 + OVERSHOOT_TOLERANCE).contains(&p) {
        return Err(Error::Consistency(format!(
            "excitation probability {p} outside [0, 1] at k = {k}"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Modes are integrated independently (in parallel if enabled); the result is
/// in grid order and bitwise independent of scheduling.
pub fn profile_dynamic(
    grid: &MomentumGrid,
    protocol: &QuenchProtocol,
    settings: &EvolutionSettings,
) -> Result<ExcitationProfile> {
    if protocol.is_sudden() {
        return Err(Error::SuddenProtocol);
    }
    settings.validate()?;
    let momenta = grid.momenta();
    let probs = par::try_map_indexed(settings.execution, momenta.len(), |i| {
        transition_probability(momenta[i], protocol, settings)
    })?;
    ExcitationProfile::new(grid.clone(), probs, ProfileSource::Dynamic)
}
