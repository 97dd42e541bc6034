//! Parameter sweeps over the well geometry and the tunneling splitting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::grid::Grid;
use crate::potential::{effective_potential, well_geometry, SystemParams};
use crate::spectrum::{default_grid, solve_for_params, GridPolicy, Splitting};

pub const CSV_HEADER: &str = "swept,D,x_min,E_b,E_ground,ratio,J,J_flag";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepField {
    Eta,
    DeltaC,
    G2,
    Kappa,
}

impl SweepField {
    pub fn apply(self, base: &SystemParams, value: f64) -> SystemParams {
        let mut p = *base;
        match self {
            SweepField::Eta => p.eta = value,
            SweepField::DeltaC => p.delta_c = value,
            SweepField::G2 => p.g2 = value,
            SweepField::Kappa => p.kappa = value,
        }
        p
    }
}

/// Zero of energy used for the E_ground column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundReference {
    /// E₁ − U(x_min).
    #[default]
    WellMinimum,
    /// E₁ itself.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SystemParams,
    pub field: SweepField,
    pub values: Vec<f64>,
    pub ground_reference: GroundReference,
    pub grid: GridPolicy,
}

impl SweepSpec {
    pub fn new(base: SystemParams, field: SweepField, values: Vec<f64>) -> Self {
        Self {
            base,
            field,
            values,
            ground_reference: GroundReference::default(),
            grid: GridPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParameter {
                field: "sweep.values",
                reason: "must not be empty".into(),
            });
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "sweep.values",
                reason: format!("non-finite value {v}"),
            });
        }
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidParameter {
                field: "sweep.values",
                reason: "must be strictly monotone".into(),
            });
        }
        check_positive("sweep.grid.max_spacing", self.grid.max_spacing)
    }
}

/// `n` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    end
                } else {
                    start + (end - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JFlag {
    Ok,
    BelowResolution,
    SingleWell,
    Error,
}

impl JFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            JFlag::Ok => "ok",
            JFlag::BelowResolution => "below_resolution",
            JFlag::SingleWell => "single_well",
            JFlag::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub swept: f64,
    pub discriminant: f64,
    pub x_min: Option<f64>,
    pub barrier_height: Option<f64>,
    pub e_ground: Option<f64>,
    pub ratio: Option<f64>,
    /// Only present when resolved.
    pub tunneling: Option<f64>,
    pub j_flag: JFlag,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    /// U(0), the barrier top when the well is double.
    pub barrier_top: f64,
    pub grid: Option<Grid>,
    pub error: Option<String>,
}

impl SweepRow {
    /// Both doublet levels lie below the barrier top.
    pub fn doublet_under_barrier(&self) -> bool {
        matches!((self.e1, self.e2), (Some(a), Some(b)) if a < self.barrier_top && b < self.barrier_top)
    }
}

fn run_row(spec: &SweepSpec, value: f64) -> SweepRow {
    let params = spec.field.apply(&spec.base, value);
    let geometry = well_geometry(&params);
    let mut row = SweepRow {
        swept: value,
        discriminant: geometry.discriminant,
        x_min: geometry.x_min,
        barrier_height: geometry.barrier_height,
        e_ground: None,
        ratio: None,
        tunneling: None,
        j_flag: JFlag::SingleWell,
        e1: None,
        e2: None,
        barrier_top: effective_potential(&params, 0.0),
        grid: None,
        error: None,
    };
    if let Err(e) = params.validate() {
        row.j_flag = JFlag::Error;
        row.error = Some(e.to_string());
        return row;
    }
    let (Some(x_min), Some(eb)) = (geometry.x_min, geometry.barrier_height) else {
        return row;
    };
    let solved = default_grid(&params, spec.grid).and_then(|grid| {
        solve_for_params(&params, &grid, 2).map(|eig| (grid, eig))
    });
    match solved {
        Ok((grid, eig)) => {
            let (e1, e2) = (eig.energies[0], eig.energies[1]);
            let e_ground = match spec.ground_reference {
                GroundReference::WellMinimum => e1 - effective_potential(&params, x_min),
                GroundReference::Absolute => e1,
            };
            let split = Splitting::classify(e2 - e1);
            row.e1 = Some(e1);
            row.e2 = Some(e2);
            row.e_ground = Some(e_ground);
            row.ratio = Some(eb / e_ground);
            row.tunneling = split.resolved_value();
            row.j_flag = if split.resolved {
                JFlag::Ok
            } else {
                JFlag::BelowResolution
            };
            row.grid = Some(grid);
        }
        Err(e) => {
            row.j_flag = JFlag::Error;
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Evaluates every value of the sweep; rows come back in input order and
/// per-row failures are recorded in the row.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(spec.values.par_iter().map(|&v| run_row(spec, v)).collect())
}

/// Formats a double with 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            format_number(r.swept),
            format_number(r.discriminant),
            opt(r.x_min),
            opt(r.barrier_height),
            opt(r.e_ground),
            opt(r.ratio),
            opt(r.tunneling),
            r.j_flag.as_str().to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Least-squares line through (x, y).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        n,
    })
}

/// Fit of ln J against the swept value over rows whose doublet sits under
/// the barrier and whose J is resolved.
pub fn deep_tail_fit(rows: &[SweepRow]) -> Option<LinearFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.doublet_under_barrier())
        .filter_map(|r| r.tunneling.map(|j| (r.swept, j.ln())))
        .unzip();
    linear_fit(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceMargin {
    /// Tunneling rate in s⁻¹.
    pub j_si: f64,
    /// J / (ω_M/Q).
    pub margin: f64,
    pub decoherence_dominated: bool,
}

/// Compares the tunneling rate `j` (units of ω_M) with the mechanical
/// damping rate ω_M/Q.
pub fn decoherence_margin(j: f64, quality_factor: f64, omega_m_si: f64) -> Result<DecoherenceMargin> {
    check_positive("J", j)?;
    check_positive("quality_factor", quality_factor)?;
    check_positive("omega_m", omega_m_si)?;
    let margin = j * quality_factor;
    Ok(DecoherenceMargin {
        j_si: j * omega_m_si,
        margin,
        decoherence_dominated: margin <= 1.0,
    })
}
