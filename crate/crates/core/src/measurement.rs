//! Pulsed Gaussian position measurements and quantum trajectories.
//!
//! A pulse with uncertainty σ acts through the Kraus family
//! Υ(x_res) = (σ√π)^(−1/2) exp[−(x_res − x̂)²/(2σ²)], whose Born-rule marginal
//! is |ψ|² convolved with a Gaussian of variance σ²/2. Outcomes are sampled
//! with exactly that decomposition: x from |ψ|² on the grid, plus noise.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{expectation_position, SplitOperator, WaveState, DEFAULT_TIME_STEP};
use crate::error::{check_positive, Error, Result};

/// One-sided mass a preparation must reach to be accepted.
pub const PREP_LOCALIZATION: f64 = 0.9;

/// Preparation attempts before giving up.
pub const DEFAULT_PREP_ATTEMPTS: usize = 100;

/// Post-selected ensembles smaller than this are reported as unreliable.
pub const MIN_SELECTED: usize = 10;

pub type TrajectoryRng = ChaCha8Rng;

/// Independent random stream for trajectory `index` of a run seeded by `seed`.
pub fn stream_rng(seed: u64, index: u64) -> TrajectoryRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Side of a position; the origin counts as right.
    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// Probability mass of `state` on this side.
    pub fn mass(self, state: &WaveState) -> f64 {
        let left = state.left_probability();
        match self {
            Side::Left => left,
            Side::Right => 1.0 - left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub sigma: f64,
    pub n_pulses: usize,
    pub pulse_interval: f64,
    pub prep_sigma: f64,
    pub seed: u64,
    #[serde(default = "default_time_step")]
    pub time_step: f64,
}

fn default_time_step() -> f64 {
    DEFAULT_TIME_STEP
}

impl MeasurementConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("measurement.sigma", self.sigma)?;
        check_positive("measurement.prep_sigma", self.prep_sigma)?;
        check_positive("measurement.pulse_interval", self.pulse_interval)?;
        check_positive("measurement.time_step", self.time_step)?;
        Ok(())
    }

    /// Propagation steps per interval and the step that divides it evenly.
    pub fn steps_per_pulse(&self) -> (usize, f64) {
        let steps = (self.pulse_interval / self.time_step).ceil().max(1.0) as usize;
        (steps, self.pulse_interval / steps as f64)
    }
}

/// Interval that fits `pulses_per_inverse_j` pulses into 1/J.
pub fn pulse_interval_for(tunneling: f64, pulses_per_inverse_j: f64) -> Result<f64> {
    check_positive("tunneling rate", tunneling)?;
    check_positive("pulses_per_inverse_j", pulses_per_inverse_j)?;
    Ok(1.0 / (tunneling * pulses_per_inverse_j))
}

/// Draws a node position from |ψ|² by inverse CDF over the trapezoid weights.
pub fn sample_position(state: &WaveState, rng: &mut impl Rng) -> f64 {
    let grid = &state.grid;
    let mut cdf = Vec::with_capacity(grid.n);
    let mut acc = 0.0;
    for (i, c) in state.amplitudes.iter().enumerate() {
        acc += grid.weight(i) * c.norm_sqr();
        cdf.push(acc);
    }
    let u = rng.random::<f64>() * acc;
    let i = cdf.partition_point(|&c| c <= u).min(grid.n - 1);
    grid.node(i)
}

/// Applies the Kraus operator for outcome `x_res` and renormalizes.
pub fn apply_kraus(state: &WaveState, x_res: f64, sigma: f64) -> Result<WaveState> {
    check_positive("sigma", sigma)?;
    let grid = &state.grid;
    // Factoring out the largest Gaussian value changes nothing after
    // renormalization and keeps sharp pulses from underflowing.
    let nearest = (0..grid.n)
        .map(|i| (x_res - grid.node(i)).powi(2))
        .fold(f64::INFINITY, f64::min);
    let scale = 1.0 / (2.0 * sigma * sigma);
    let amplitudes: Vec<Complex64> = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, c)| c * (-((x_res - grid.node(i)).powi(2) - nearest) * scale).exp())
        .collect();
    let mut out = WaveState {
        amplitudes,
        time: state.time,
        grid: *grid,
    };
    let norm = out.norm_sqr();
    if !(norm.is_finite() && norm > 1e-280) {
        return Err(Error::NormUnderflow { x_res, sigma });
    }
    out.normalize();
    Ok(out)
}

/// One pulse: samples an outcome and returns it with the post-measurement state.
pub fn weak_measure(state: &WaveState, sigma: f64, rng: &mut impl Rng) -> Result<(f64, WaveState)> {
    check_positive("sigma", sigma)?;
    let x = sample_position(state, rng);
    let noise: f64 = rng.sample(StandardNormal);
    let x_res = x + noise * sigma / std::f64::consts::SQRT_2;
    let post = apply_kraus(state, x_res, sigma)?;
    Ok((x_res, post))
}

#[derive(Debug, Clone)]
pub struct Preparation {
    pub side: Side,
    pub state: WaveState,
    pub x_res: f64,
    /// Mass of `state` on `side`.
    pub localization: f64,
    pub attempts: usize,
}

/// Projects the symmetric ground state into one well with a single pulse,
/// repeating on the original state until the result is localized.
pub fn prepare_localized(
    state: &WaveState,
    prep_sigma: f64,
    rng: &mut impl Rng,
    max_attempts: usize,
) -> Result<Preparation> {
    check_positive("prep_sigma", prep_sigma)?;
    for attempt in 1..=max_attempts.max(1) {
        let (x_res, post) = weak_measure(state, prep_sigma, rng)?;
        let side = Side::of(x_res);
        let localization = side.mass(&post);
        if localization >= PREP_LOCALIZATION {
            return Ok(Preparation {
                side,
                state: post,
                x_res,
                localization,
                attempts: attempt,
            });
        }
    }
    Err(Error::PreparationFailed {
        attempts: max_attempts.max(1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub t: f64,
    pub x_res: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub outcomes: Vec<Outcome>,
    /// ⟨x⟩ after each pulse.
    pub means: Vec<f64>,
    /// ⟨H⟩ after each pulse.
    pub energies: Vec<f64>,
    pub initial_side: Side,
    pub seed: u64,
    pub stream: u64,
    pub prep_attempts: usize,
    /// ⟨H⟩ of the state the pulse sequence started from.
    pub initial_energy: f64,
    pub final_left_probability: f64,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Side holding most of the final state's mass.
    pub fn final_side(&self) -> Side {
        if self.final_left_probability > 0.5 {
            Side::Left
        } else {
            Side::Right
        }
    }

    /// Number of sign changes in the outcome sequence, counting from the
    /// initial side.
    pub fn outcome_jumps(&self) -> usize {
        let mut side = self.initial_side;
        let mut jumps = 0;
        for o in &self.outcomes {
            let s = Side::of(o.x_res);
            if s != side {
                jumps += 1;
                side = s;
            }
        }
        jumps
    }
}

#[allow(clippy::too_many_arguments)]
fn pulse_sequence(
    prop: &mut SplitOperator,
    mut state: WaveState,
    config: &MeasurementConfig,
    steps: usize,
    rng: &mut TrajectoryRng,
    initial_side: Side,
    stream: u64,
    prep_attempts: usize,
) -> Result<TrajectoryRecord> {
    let n = config.n_pulses;
    let initial_energy = prop.energy(&state);
    let mut outcomes = Vec::with_capacity(n);
    let mut means = Vec::with_capacity(n);
    let mut energies = Vec::with_capacity(n);
    for _ in 0..n {
        prop.advance(&mut state, steps)?;
        let (x_res, post) = weak_measure(&state, config.sigma, rng)?;
        state = post;
        outcomes.push(Outcome { t: state.time, x_res });
        means.push(expectation_position(&state));
        energies.push(prop.energy(&state));
    }
    Ok(TrajectoryRecord {
        outcomes,
        means,
        energies,
        initial_side,
        seed: config.seed,
        stream,
        prep_attempts,
        initial_energy,
        final_left_probability: state.left_probability(),
    })
}

/// Alternates free evolution and pulses starting from an already prepared
/// state, drawing randomness from stream 0 of `config.seed`.
pub fn run_trajectory(
    initial: &WaveState,
    potential: &[f64],
    config: &MeasurementConfig,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    let (steps, dt) = config.steps_per_pulse();
    let mut prop = SplitOperator::new(&initial.grid, potential, dt)?;
    let mut rng = stream_rng(config.seed, 0);
    let side = if initial.left_probability() > 0.5 {
        Side::Left
    } else {
        Side::Right
    };
    pulse_sequence(&mut prop, initial.clone(), config, steps, &mut rng, side, 0, 0)
}

/// Histogram with clamped edges: values outside `[lo, hi)` land in the
/// outermost bins, so counts always sum to the number of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || bins == 0 {
            return Err(Error::InvalidParameter {
                field: "histogram",
                reason: format!("need lo < hi and bins ≥ 1, got [{lo}, {hi}] with {bins}"),
            });
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
        })
    }

    pub fn add(&mut self, value: f64) {
        let bins = self.counts.len();
        let f = (value - self.lo) / (self.hi - self.lo) * bins as f64;
        let i = if f.is_nan() || f < 0.0 {
            0
        } else {
            (f as usize).min(bins - 1)
        };
        self.counts[i] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        (self.lo + w * i as f64, self.lo + w * (i + 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSpec {
    /// Zero-based pulse index.
    pub pulse: usize,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    /// Trajectories run, including those rejected by post-selection.
    pub n_traj: usize,
    pub n_selected: usize,
    pub post_selected_side: Option<Side>,
    pub histogram_pulse: usize,
    pub histogram_time: f64,
    pub histogram: Histogram,
    /// Fraction of the histogrammed outcomes with x_res > 0.
    pub right_fraction: Option<f64>,
    pub times: Vec<f64>,
    pub mean_trace: Vec<f64>,
    pub mean_energy: Vec<f64>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub stats: EnsembleStats,
    pub records: Vec<TrajectoryRecord>,
}

/// Everything a trajectory needs besides its index: the ground state to
/// project, the propagator and the pulse schedule.
#[derive(Clone)]
pub struct Protocol {
    ground: WaveState,
    propagator: SplitOperator,
    steps: usize,
    config: MeasurementConfig,
    max_prep_attempts: usize,
}

impl Protocol {
    pub fn new(ground: WaveState, potential: &[f64], config: MeasurementConfig) -> Result<Self> {
        config.validate()?;
        let (steps, dt) = config.steps_per_pulse();
        let propagator = SplitOperator::new(&ground.grid, potential, dt)?;
        Ok(Self {
            ground,
            propagator,
            steps,
            config,
            max_prep_attempts: DEFAULT_PREP_ATTEMPTS,
        })
    }

    pub fn with_max_prep_attempts(mut self, attempts: usize) -> Self {
        self.max_prep_attempts = attempts.max(1);
        self
    }

    pub fn config(&self) -> &MeasurementConfig {
        &self.config
    }

    pub fn ground(&self) -> &WaveState {
        &self.ground
    }

    pub fn potential(&self) -> &[f64] {
        self.propagator.potential()
    }

    /// Same ground state and potential with a different schedule.
    pub fn with_config(&self, config: MeasurementConfig) -> Result<Self> {
        Ok(Self::new(self.ground.clone(), self.propagator.potential(), config)?
            .with_max_prep_attempts(self.max_prep_attempts))
    }

    /// Preparation for trajectory `index` and the stream positioned after it.
    pub fn prepare(&self, index: u64) -> Result<(Preparation, TrajectoryRng)> {
        let mut rng = stream_rng(self.config.seed, index);
        let prep = prepare_localized(
            &self.ground,
            self.config.prep_sigma,
            &mut rng,
            self.max_prep_attempts,
        )?;
        Ok((prep, rng))
    }

    pub fn trajectory(&self, index: u64) -> Result<TrajectoryRecord> {
        let (prep, mut rng) = self.prepare(index)?;
        self.run_from(prep, &mut rng, index)
    }

    /// Pulse sequence after an explicit preparation, continuing `rng`.
    pub fn run_from(
        &self,
        prep: Preparation,
        rng: &mut TrajectoryRng,
        index: u64,
    ) -> Result<TrajectoryRecord> {
        let mut prop = self.propagator.clone();
        pulse_sequence(
            &mut prop,
            prep.state,
            &self.config,
            self.steps,
            rng,
            prep.side,
            index,
            prep.attempts,
        )
    }

    /// Runs the trajectory only if its preparation lands on `side` (or
    /// always, for `None`).
    fn selected(&self, index: u64, side: Option<Side>) -> Result<Option<TrajectoryRecord>> {
        let (prep, mut rng) = self.prepare(index)?;
        if side.is_some_and(|s| s != prep.side) {
            return Ok(None);
        }
        self.run_from(prep, &mut rng, index).map(Some)
    }

    /// Runs trajectories `0..n_traj` in parallel and aggregates those that
    /// started on `post_select`.
    pub fn ensemble(
        &self,
        n_traj: usize,
        post_select: Option<Side>,
        histogram: &HistogramSpec,
    ) -> Result<Ensemble> {
        if n_traj == 0 {
            return Err(Error::InvalidParameter {
                field: "ensemble.n_traj",
                reason: "must be at least 1".into(),
            });
        }
        self.check_histogram(histogram)?;
        let records: Vec<TrajectoryRecord> = (0..n_traj as u64)
            .into_par_iter()
            .map(|i| self.selected(i, post_select))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        self.aggregate(n_traj, post_select, histogram, records)
    }

    /// Runs trajectories in index order until `n_selected` of them started on
    /// `side`, giving up after `max_traj`.
    pub fn post_selected(
        &self,
        n_selected: usize,
        side: Side,
        histogram: &HistogramSpec,
        max_traj: usize,
    ) -> Result<Ensemble> {
        self.check_histogram(histogram)?;
        let mut records = Vec::with_capacity(n_selected);
        let mut next = 0usize;
        let mut consumed = 0usize;
        while records.len() < n_selected && next < max_traj {
            let batch = (2 * (n_selected - records.len()) + 4).min(max_traj - next);
            let found: Vec<Option<TrajectoryRecord>> = (next as u64..(next + batch) as u64)
                .into_par_iter()
                .map(|i| self.selected(i, Some(side)))
                .collect::<Result<Vec<_>>>()?;
            for (offset, r) in found.into_iter().enumerate() {
                if records.len() == n_selected {
                    break;
                }
                if let Some(r) = r {
                    records.push(r);
                    consumed = next + offset + 1;
                }
            }
            next += batch;
        }
        if records.len() < n_selected {
            consumed = next;
        }
        self.aggregate(consumed, Some(side), histogram, records)
    }

    fn check_histogram(&self, histogram: &HistogramSpec) -> Result<()> {
        if histogram.pulse >= self.config.n_pulses {
            return Err(Error::InvalidParameter {
                field: "ensemble.histogram_pulse",
                reason: format!(
                    "pulse {} out of range for {} pulses",
                    histogram.pulse, self.config.n_pulses
                ),
            });
        }
        Histogram::new(histogram.lo, histogram.hi, histogram.bins).map(|_| ())
    }

    fn aggregate(
        &self,
        n_traj: usize,
        post_select: Option<Side>,
        spec: &HistogramSpec,
        records: Vec<TrajectoryRecord>,
    ) -> Result<Ensemble> {
        let n_pulses = self.config.n_pulses;
        let mut histogram = Histogram::new(spec.lo, spec.hi, spec.bins)?;
        let mut mean_trace = vec![0.0; n_pulses];
        let mut mean_energy = vec![0.0; n_pulses];
        let mut right = 0usize;
        for r in &records {
            let x = r.outcomes[spec.pulse].x_res;
            histogram.add(x);
            if x > 0.0 {
                right += 1;
            }
            for k in 0..n_pulses {
                mean_trace[k] += r.means[k];
                mean_energy[k] += r.energies[k];
            }
        }
        let n_selected = records.len();
        if n_selected > 0 {
            let inv = 1.0 / n_selected as f64;
            mean_trace.iter_mut().for_each(|v| *v *= inv);
            mean_energy.iter_mut().for_each(|v| *v *= inv);
        } else {
            mean_trace.clear();
            mean_energy.clear();
        }
        let warning = (n_selected < MIN_SELECTED).then(|| {
            let msg = format!(
                "post-selection kept {n_selected} of {n_traj} trajectories; statistics are unreliable"
            );
            log::warn!("{msg}");
            msg
        });
        let interval = self.config.pulse_interval;
        Ok(Ensemble {
            stats: EnsembleStats {
                n_traj,
                n_selected,
                post_selected_side: post_select,
                histogram_pulse: spec.pulse,
                histogram_time: self.ground.time + interval * (spec.pulse + 1) as f64,
                histogram,
                right_fraction: (n_selected > 0).then(|| right as f64 / n_selected as f64),
                times: (1..=n_pulses)
                    .map(|k| self.ground.time + interval * k as f64)
                    .collect(),
                mean_trace,
                mean_energy,
                warning,
            },
            records,
        })
    }
}

/// Zero-based index of the pulse recorded closest to time `t` after the
/// preparation.
pub fn pulse_nearest(config: &MeasurementConfig, t: f64) -> usize {
    let k = (t / config.pulse_interval).round().max(1.0) as usize;
    k.min(config.n_pulses.max(1)) - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZenoRow {
    pub multiplier: u32,
    pub n_pulses: usize,
    pub pulse_interval: f64,
    pub n_traj: usize,
    /// Fraction of trajectories whose final state sits mostly in the well
    /// opposite to where they were prepared.
    pub crossing_fraction: f64,
    pub standard_error: f64,
}

/// For each multiplier m, shortens the pulse interval of `base` by m (keeping
/// the total time and σ) and measures how often the membrane ends up in
/// the other well.
pub fn zeno_scan(base: &Protocol, multipliers: &[u32], n_traj: usize) -> Result<Vec<ZenoRow>> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter {
            field: "zeno.n_traj",
            reason: "must be at least 1".into(),
        });
    }
    if let Some(&m) = multipliers.iter().find(|&&m| m < 1) {
        return Err(Error::InvalidParameter {
            field: "zeno.multipliers",
            reason: format!("multipliers must be ≥ 1, got {m}"),
        });
    }
    let cfg = base.config();
    multipliers
        .iter()
        .map(|&m| {
            let config = MeasurementConfig {
                n_pulses: cfg.n_pulses * m as usize,
                pulse_interval: cfg.pulse_interval / m as f64,
                ..*cfg
            };
            let protocol = base.with_config(config)?;
            let crossed: Vec<bool> = (0..n_traj as u64)
                .into_par_iter()
                .map(|i| {
                    protocol
                        .trajectory(i)
                        .map(|r| r.final_side() != r.initial_side)
                })
                .collect::<Result<Vec<_>>>()?;
            let p = crossed.iter().filter(|&&c| c).count() as f64 / n_traj as f64;
            Ok(ZenoRow {
                multiplier: m,
                n_pulses: config.n_pulses,
                pulse_interval: config.pulse_interval,
                n_traj,
                crossing_fraction: p,
                standard_error: (p * (1.0 - p) / n_traj as f64).sqrt(),
            })
        })
        .collect()
}
