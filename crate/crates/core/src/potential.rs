//! The cavity-induced effective potential and its closed-form double-well geometry.
//!
//! Everything is expressed in oscillator units (ħ = M = ω_M = 1): lengths in
//! units of the zero-point width, energies in ħω_M, rates in ω_M. The pump
//! enters only through the static detuning Δ(x) = δ_c + g₂x², i.e. the cavity
//! field is assumed to follow the membrane adiabatically.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_positive, Error, Result};
use crate::grid::Grid;

/// Dimensionless cavity, drive and coupling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Quadratic optomechanical coupling; negative values raise a barrier.
    pub g2: f64,
    /// Pump rate, ≥ 0.
    pub eta: f64,
    /// Pump–cavity detuning ω_c − ω_p.
    pub delta_c: f64,
    /// Cavity linewidth, > 0.
    pub kappa: f64,
}

impl SystemParams {
    pub fn new(g2: f64, eta: f64, delta_c: f64, kappa: f64) -> Result<Self> {
        let p = Self {
            g2,
            eta,
            delta_c,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("system.g2", self.g2)?;
        check_finite("system.delta_c", self.delta_c)?;
        check_positive("system.kappa", self.kappa)?;
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "system.eta",
                reason: format!("must be finite and non-negative, got {}", self.eta),
            });
        }
        Ok(())
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }

    /// Static detuning Δ(x) = δ_c + g₂x².
    pub fn detuning(&self, x: f64) -> f64 {
        self.delta_c + self.g2 * x * x
    }

    /// Prefactor 4η²/κ of the light-induced arctangent term.
    pub fn light_strength(&self) -> f64 {
        4.0 * self.eta * self.eta / self.kappa
    }
}

/// Intracavity photon number η² / [(κ/2)² + Δ(x)²].
pub fn intracavity_intensity(params: &SystemParams, x: f64) -> f64 {
    let half_kappa = 0.5 * params.kappa;
    let delta = params.detuning(x);
    params.eta * params.eta / (half_kappa * half_kappa + delta * delta)
}

/// U(x) = x²/2 + (4η²/κ)·arctan[Δ(x)/(κ/2)].
pub fn effective_potential(params: &SystemParams, x: f64) -> f64 {
    0.5 * x * x + params.light_strength() * (params.detuning(x) / (0.5 * params.kappa)).atan()
}

/// Pointwise effective potential on every grid node.
pub fn potential_on_grid(params: &SystemParams, grid: &Grid) -> Vec<f64> {
    (0..grid.n)
        .map(|i| effective_potential(params, grid.node(i)))
        .collect()
}

/// Closed-form descriptors of the double well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellGeometry {
    /// D = −κ² − 16η²g₂.
    pub discriminant: f64,
    /// Position of the right-hand minimum (the left one sits at −x_min).
    pub x_min: Option<f64>,
    /// U(0) − U(x_min).
    pub barrier_height: Option<f64>,
    pub is_double_well: bool,
}

/// Discriminant, minima and barrier height of U.
///
/// A double well needs D > 0, g₂ < 0 and a positive radicand for x_min². On
/// top of that the origin must be a local maximum (|2δ_c| < √D); for large
/// positive detuning the origin is itself a minimum and ±x_min are no longer
/// the global minima, so that case is reported as `is_double_well = false`.
pub fn well_geometry(params: &SystemParams) -> WellGeometry {
    let SystemParams {
        g2,
        eta,
        delta_c,
        kappa,
    } = *params;
    let discriminant = -kappa * kappa - 16.0 * eta * eta * g2;
    let single = WellGeometry {
        discriminant,
        x_min: None,
        barrier_height: None,
        is_double_well: false,
    };
    if !(discriminant > 0.0 && g2 < 0.0) {
        return single;
    }
    let root_d = discriminant.sqrt();
    let radicand = -(2.0 * delta_c + root_d) / (2.0 * g2);
    if !(radicand > 0.0 && 2.0 * delta_c < root_d) {
        return single;
    }
    let x_min = radicand.sqrt();
    let barrier_height = -0.5 * radicand
        + params.light_strength() * ((2.0 * delta_c / kappa).atan() + (root_d / kappa).atan());
    WellGeometry {
        discriminant,
        x_min: Some(x_min),
        barrier_height: Some(barrier_height),
        is_double_well: true,
    }
}

/// Pump rate at which D vanishes, sqrt(κ² / (−16 g₂)). `None` for g₂ ≥ 0,
/// where no pump strength opens a barrier.
pub fn threshold_pump(g2: f64, kappa: f64) -> Option<f64> {
    (g2 < 0.0).then(|| (kappa * kappa / (-16.0 * g2)).sqrt())
}

/// Conversion from oscillator units to SI, for reporting only.
///
/// The simulation never leaves dimensionless units; this maps its outputs
/// onto a concrete membrane with angular frequency `omega_m` (rad/s) and
/// effective mass `mass` (kg).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorUnits {
    pub omega_m: f64,
    pub mass: f64,
}

impl OscillatorUnits {
    pub const HBAR: f64 = 1.054_571_817e-34;

    /// Zero-point width sqrt(ħ / (M ω_M)) in metres.
    pub fn length(&self) -> f64 {
        (Self::HBAR / (self.mass * self.omega_m)).sqrt()
    }

    /// ħω_M in joules.
    pub fn energy(&self) -> f64 {
        Self::HBAR * self.omega_m
    }

    /// 1/ω_M in seconds.
    pub fn time(&self) -> f64 {
        1.0 / self.omega_m
    }

    /// A dimensionless rate expressed in s⁻¹.
    pub fn rate(&self, dimensionless: f64) -> f64 {
        dimensionless * self.omega_m
    }
}
