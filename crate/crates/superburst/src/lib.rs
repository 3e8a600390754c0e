//! Simulator and nonlinear-dynamics toolkit for a driven-dissipative ensemble
//! of spins coupled to a lossy cavity.
//!
//! The crate models the same system at three levels of approximation:
//!
//! * [`meanfield`] — first-order mean field with an explicit cavity, the
//!   adiabatically eliminated (bad-cavity) variant, and the full three-level
//!   dual-rail system in [`threelevel`];
//! * [`cumulant`] — the frequency-binned second-order cumulant expansion,
//!   which keeps spin-spin correlations and reproduces the periodic
//!   superradiance quantitatively;
//! * [`bifurcation`] — the reduced two-sub-ensemble model whose steady states,
//!   Jacobian and Hopf condition give the three-phase diagram in closed form.
//!
//! [`analysis`] extracts burst trains, periods, spectra and order parameters
//! from emission traces, and [`runner`]/[`config`] provide the JSON-configured
//! experiment orchestration behind the `superburst` binary.
//!
//! Conventions used everywhere: internal rates and frequencies are angular
//! (rad/s); configs accept linear Hz and are converted once at parse time.
//! The per-bin inversion `u` is dimensionless with `u = +1` for a fully
//! excited (inverted) bin and `u = -1` for the ground state, so incoherent
//! pumping pushes `u` toward +1. Dynamical models are written in the frame
//! rotating at the cavity frequency; only detunings enter the equations.

pub mod analysis;
pub mod bifurcation;
pub mod config;
pub mod cumulant;
pub mod error;
pub mod meanfield;
pub mod model;
pub mod ode;
pub mod presets;
pub mod runner;
pub mod threelevel;

pub use error::{Error, Result};
