//! Defect statistics for quenches of the periodic transverse-field Ising chain.
//!
//! The chain decomposes into independent two-level problems, one per positive
//! momentum. Each mode ends a quench excited with probability `p_k`, so the
//! number of excited pairs is Poisson-binomial. This crate provides:
//!
//! * [`model`]: momentum grids, linear-ramp protocols and the per-mode Hamiltonian.
//! * [`spectral`]: eigenstates, dispersion and sudden-quench overlaps.
//! * [`cumulants`]: closed-form and series cumulants for quenches from criticality.
//! * [`dynamics`]: adaptive integration of the ramped two-level problem.
//! * [`fcs`]: exact pair-number distributions, sampling and Gaussian diagnostics.
//! * [`scaling`]: depth and rate sweeps plus log-space fits.
//! * [`verify`]: the self-check suite behind `quench verify`.
//!
//! Mode-parallel work goes through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cumulants;
pub mod dynamics;
pub mod error;
pub mod fcs;
pub mod model;
pub mod ode;
pub mod par;
pub mod propagator;
pub mod quadrature;
pub mod scaling;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use model::{ModeHamiltonian, MomentumGrid, QuenchProtocol, G_CRITICAL};
pub use par::Execution;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
