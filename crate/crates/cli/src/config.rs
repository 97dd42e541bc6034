//! Run configuration: one JSON document, parsed strictly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use optotunnel::dynamics::RampShape;
use optotunnel::measurement::Side;
use optotunnel::sweep::{GroundReference, SweepField};
use optotunnel::SystemParams;

use crate::Invalid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemParams,
    #[serde(default, skip_serializing_if = "is_default")]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preparation: Option<PreparationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeno: Option<ZenoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub output: OutputConfig,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemParams {
                g2: -2e-4,
                eta: 176.785,
                delta_c: 0.0,
                kappa: 10.0,
            },
            grid: GridConfig::default(),
            spectrum: None,
            measurement: None,
            preparation: None,
            ensemble: None,
            zeno: None,
            sweep: None,
            output: OutputConfig::default(),
        }
    }
}

/// Overrides of the automatic box. Absent fields keep the automatic choice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub n_states: usize,
    /// Also report Richardson-extrapolated energies.
    #[serde(default)]
    pub extrapolate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub sigma: f64,
    pub n_pulses: usize,
    /// Explicit interval; otherwise derived from `pulses_per_inverse_j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulses_per_inverse_j: Option<f64>,
    /// Defaults to x_min.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep_sigma: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_prep_attempts: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreparationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<RampConfig>,
}

/// Barrier ramp from `eta_start` up to the system's η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampConfig {
    pub eta_start: f64,
    pub duration: f64,
    pub shape: RampShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Trajectories to run (an upper bound when `n_selected` is set).
    pub n_traj: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_select: Option<Side>,
    /// Keep running until this many trajectories pass post-selection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_selected: Option<usize>,
    /// Zero-based pulse to histogram; takes precedence over `histogram_time`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram_pulse: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Histogram covers ±range; defaults to x_min + 3σ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZenoConfig {
    pub multipliers: Vec<u32>,
    pub n_traj: usize,
    /// Defaults to x_min/3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Defaults to π/J.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub field: SweepField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<SweepRange>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub ground_reference: GroundReference,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoherence: Option<DecoherenceConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceConfig {
    pub quality_factor: f64,
    /// Mechanical angular frequency in s⁻¹.
    pub omega_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
}

pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Invalid(format!("reading config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Invalid(format!("config {}: {e}", path.display())).into())
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn positive(field: &str, v: Option<f64>) -> anyhow::Result<()> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => {
            Err(invalid(format!("`{field}` must be a finite positive number, got {x}")))
        }
        _ => Ok(()),
    }
}

impl RunConfig {
    /// Checks everything that can be checked without solving anything.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.system.validate().map_err(|e| invalid(e.to_string()))?;
        positive("grid.half_width", self.grid.half_width)?;
        positive("grid.spacing", self.grid.spacing)?;
        if let Some(s) = &self.spectrum {
            if s.n_states < 2 {
                return Err(invalid("`spectrum.n_states` must be at least 2"));
            }
        }
        if let Some(m) = &self.measurement {
            positive("measurement.sigma", Some(m.sigma))?;
            positive("measurement.pulse_interval", m.pulse_interval)?;
            positive("measurement.pulses_per_inverse_j", m.pulses_per_inverse_j)?;
            positive("measurement.prep_sigma", m.prep_sigma)?;
            positive("measurement.time_step", m.time_step)?;
            if m.max_prep_attempts == Some(0) {
                return Err(invalid("`measurement.max_prep_attempts` must be at least 1"));
            }
        }
        if let Some(r) = self.preparation.as_ref().and_then(|p| p.ramp.as_ref()) {
            positive("preparation.ramp.duration", Some(r.duration))?;
            positive("preparation.ramp.time_step", r.time_step)?;
            if !(r.eta_start.is_finite() && r.eta_start >= 0.0) {
                return Err(invalid(format!(
                    "`preparation.ramp.eta_start` must be non-negative, got {}",
                    r.eta_start
                )));
            }
        }
        if let Some(e) = &self.ensemble {
            if e.n_traj == 0 {
                return Err(invalid("`ensemble.n_traj` must be at least 1"));
            }
            if e.n_selected == Some(0) {
                return Err(invalid("`ensemble.n_selected` must be at least 1"));
            }
            if e.n_selected.is_some() && e.post_select.is_none() {
                return Err(invalid("`ensemble.n_selected` needs `ensemble.post_select`"));
            }
            if e.bins == Some(0) {
                return Err(invalid("`ensemble.bins` must be at least 1"));
            }
            positive("ensemble.histogram_time", e.histogram_time)?;
            positive("ensemble.range", e.range)?;
        }
        if let Some(z) = &self.zeno {
            if z.multipliers.is_empty() || z.multipliers.contains(&0) {
                return Err(invalid("`zeno.multipliers` must be a non-empty list of integers ≥ 1"));
            }
            if z.n_traj == 0 {
                return Err(invalid("`zeno.n_traj` must be at least 1"));
            }
            positive("zeno.sigma", z.sigma)?;
            positive("zeno.total_time", z.total_time)?;
        }
        if let Some(s) = &self.sweep {
            match (&s.values, &s.range) {
                (Some(_), None) => {}
                (None, Some(r)) if r.count >= 1 => {}
                (None, Some(_)) => return Err(invalid("`sweep.range.count` must be at least 1")),
                _ => return Err(invalid("`sweep` needs exactly one of `values` or `range`")),
            }
            if let Some(d) = &s.decoherence {
                positive("sweep.decoherence.quality_factor", Some(d.quality_factor))?;
                positive("sweep.decoherence.omega_m", Some(d.omega_m))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"system": {"g2": -2e-4, "eta": 1, "delta_c": 0, "kappa": 10, "color": 3}}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
        let text = r#"{"system": {"g2": -2e-4, "eta": 1, "delta_c": 0, "kappa": 10}, "extra": {}}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
    }

    #[test]
    fn minimal_config_round_trips() {
        let text = r#"{"system": {"g2": -2e-4, "eta": 1, "delta_c": 0, "kappa": 10}}"#;
        let a: RunConfig = serde_json::from_str(text).unwrap();
        let b: RunConfig = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
    }

    #[test]
    fn sweep_needs_one_value_source() {
        let mut c = RunConfig {
            sweep: Some(SweepConfig {
                field: SweepField::Eta,
                values: None,
                range: None,
                ground_reference: GroundReference::default(),
                decoherence: None,
            }),
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        c.sweep.as_mut().unwrap().values = Some(vec![1.0]);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn bad_kappa_names_the_field() {
        let mut c = RunConfig::default();
        c.system.kappa = 0.0;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("system.kappa"), "{msg}");
    }

    #[test]
    fn bundled_configs_round_trip() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "json") {
                let a = load(&path).unwrap();
                a.validate().unwrap();
                let b: RunConfig = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
                assert_eq!(a, b, "{}", path.display());
                seen += 1;
            }
        }
        assert!(seen >= 4);
    }
}
