//! Numerical simulation of macroscopic tunneling of a membrane in a
//! cavity-induced double-well potential, together with the pulsed weak
//! position measurements used to monitor it.
//!
//! All quantities are dimensionless (ħ = M = ω_M = 1). The modules build on
//! each other bottom-up:
//!
//! - [`potential`]: effective potential U(x) and its closed-form geometry.
//! - [`spectrum`]: finite-difference eigenstates, splitting J, localized states.
//! - [`dynamics`]: split-operator propagation and adiabatic barrier ramps.
//! - [`measurement`]: Gaussian Kraus pulses, trajectories, ensembles, Zeno scans.
//! - [`sweep`]: parameter sweeps and the decoherence figure of merit.

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod measurement;
pub mod potential;
pub mod spectrum;
pub mod sweep;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::Grid;
pub use potential::{SystemParams, WellGeometry};
pub use spectrum::EigenSolution;
