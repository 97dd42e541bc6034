//! Unitary propagation of pure states with the Strang split-operator method.
//!
//! The kinetic factor exp(−i k²dt/2) is applied in momentum space through an
//! FFT over the grid (periodic extension), the potential factor pointwise in
//! position space. Consecutive half potential steps are fused, so a static
//! propagation costs one FFT pair per step.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::grid::Grid;
use crate::potential::{potential_on_grid, SystemParams};
use crate::spectrum::solve_stationary;

/// Edge amplitude above which the box is considered too small.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Default propagation step, in units of 1/ω_M.
pub const DEFAULT_TIME_STEP: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
    pub grid: Grid,
}

impl WaveState {
    pub fn from_real(grid: &Grid, psi: &[f64]) -> Result<Self> {
        if psi.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "state has {} samples, grid has {} nodes",
                psi.len(),
                grid.n
            )));
        }
        Ok(Self {
            amplitudes: psi.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            time: 0.0,
            grid: *grid,
        })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// ‖ψ‖² under trapezoidal quadrature.
    pub fn norm_sqr(&self) -> f64 {
        self.grid.integrate(&self.probabilities())
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|c| *c /= n);
        }
    }

    /// Probability at x < 0.
    pub fn left_probability(&self) -> f64 {
        let p = self.probabilities();
        self.grid.integrate_left(&p) / self.grid.integrate(&p)
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &WaveState) -> Complex64 {
        let grid = &self.grid;
        (0..grid.n)
            .map(|i| grid.weight(i) * self.amplitudes[i].conj() * other.amplitudes[i])
            .sum()
    }

    /// |⟨a|b⟩|² / (‖a‖²‖b‖²).
    pub fn fidelity(&self, other: &WaveState) -> f64 {
        self.inner(other).norm_sqr() / (self.norm_sqr() * other.norm_sqr())
    }

    pub fn boundary_amplitude(&self) -> f64 {
        let n = self.amplitudes.len();
        self.amplitudes[0].norm().max(self.amplitudes[n - 1].norm())
    }
}

/// ⟨x⟩ by trapezoidal quadrature.
pub fn expectation_position(state: &WaveState) -> f64 {
    let p = state.probabilities();
    let xp: Vec<f64> = (0..state.grid.n).map(|i| state.grid.node(i) * p[i]).collect();
    state.grid.integrate(&xp) / state.grid.integrate(&p)
}

/// Position variance ⟨x²⟩ − ⟨x⟩².
pub fn position_variance(state: &WaveState) -> f64 {
    let p = state.probabilities();
    let grid = &state.grid;
    let norm = grid.integrate(&p);
    let mean = expectation_position(state);
    let dev: Vec<f64> = (0..grid.n)
        .map(|i| (grid.node(i) - mean).powi(2) * p[i])
        .collect();
    grid.integrate(&dev) / norm
}

/// ⟨U⟩ by trapezoidal quadrature.
pub fn expectation_potential(state: &WaveState, potential: &[f64]) -> f64 {
    let p = state.probabilities();
    let up: Vec<f64> = p.iter().zip(potential).map(|(a, u)| a * u).collect();
    state.grid.integrate(&up) / state.grid.integrate(&p)
}

/// Angular wavenumbers of the FFT bins for the periodic extension of `grid`.
pub fn wavenumbers(grid: &Grid) -> Vec<f64> {
    let n = grid.n;
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * grid.spacing());
    (0..n)
        .map(|j| {
            let j = if j < n.div_ceil(2) {
                j as f64
            } else {
                j as f64 - n as f64
            };
            j * dk
        })
        .collect()
}

/// Symmetric grid with spacing at most `max_spacing` and an odd node count
/// whose prime factors are all ≤ 7, so the propagator's FFTs stay fast.
pub fn propagation_grid(half_width: f64, max_spacing: f64) -> Result<Grid> {
    check_positive("grid.half_width", half_width)?;
    check_positive("grid.spacing", max_spacing)?;
    let mut n = ((2.0 * half_width / max_spacing).ceil() as usize + 1).max(3);
    n += 1 - n % 2;
    while !is_7_smooth(n) {
        n += 2;
    }
    Grid::symmetric(half_width, n)
}

fn is_7_smooth(mut n: usize) -> bool {
    for p in [2, 3, 5, 7] {
        while n.is_multiple_of(p) {
            n /= p;
        }
    }
    n == 1
}

/// Momentum-space machinery shared by the propagator and the energy observable.
#[derive(Clone)]
struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    half_k2: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl Spectral {
    fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            half_k2: wavenumbers(grid).iter().map(|k| 0.5 * k * k).collect(),
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    fn kinetic(&mut self, amplitudes: &[Complex64]) -> f64 {
        let mut buf = amplitudes.to_vec();
        self.forward.process_with_scratch(&mut buf, &mut self.scratch);
        let (mut num, mut den) = (0.0, 0.0);
        for (c, t) in buf.iter().zip(&self.half_k2) {
            let p = c.norm_sqr();
            num += p * t;
            den += p;
        }
        num / den
    }
}

/// ⟨p²/2⟩ (spectral) + ⟨U⟩ (quadrature).
pub fn expectation_energy(state: &WaveState, potential: &[f64]) -> f64 {
    let mut spectral = Spectral::new(&state.grid);
    spectral.kinetic(&state.amplitudes) + expectation_potential(state, potential)
}

/// Split-operator propagator for a static potential and fixed step.
#[derive(Clone)]
pub struct SplitOperator {
    grid: Grid,
    dt: f64,
    potential: Vec<f64>,
    spectral: Spectral,
    kinetic_phase: Vec<Complex64>,
    half_kick: Vec<Complex64>,
    full_kick: Vec<Complex64>,
}

impl SplitOperator {
    /// `dt` may be negative, which propagates backwards in time.
    pub fn new(grid: &Grid, potential: &[f64], dt: f64) -> Result<Self> {
        if potential.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "potential has {} samples, grid has {} nodes",
                potential.len(),
                grid.n
            )));
        }
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidParameter {
                field: "dt",
                reason: format!("must be finite and nonzero, got {dt}"),
            });
        }
        let spectral = Spectral::new(grid);
        let scale = 1.0 / grid.n as f64;
        let kinetic_phase = spectral
            .half_k2
            .iter()
            .map(|t| Complex64::from_polar(scale, -t * dt))
            .collect();
        let kick = |f: f64| -> Vec<Complex64> {
            potential
                .iter()
                .map(|u| Complex64::from_polar(1.0, -u * dt * f))
                .collect()
        };
        Ok(Self {
            grid: *grid,
            dt,
            potential: potential.to_vec(),
            half_kick: kick(0.5),
            full_kick: kick(1.0),
            kinetic_phase,
            spectral,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    fn kinetic_step(&mut self, psi: &mut [Complex64]) {
        let s = &mut self.spectral;
        s.forward.process_with_scratch(psi, &mut s.scratch);
        psi.iter_mut()
            .zip(&self.kinetic_phase)
            .for_each(|(c, k)| *c *= k);
        s.inverse.process_with_scratch(psi, &mut s.scratch);
    }

    /// Applies `n_steps` Strang steps in place.
    pub fn advance(&mut self, state: &mut WaveState, n_steps: usize) -> Result<()> {
        state.grid.same_as(&self.grid)?;
        if n_steps == 0 {
            return Ok(());
        }
        let psi = &mut state.amplitudes;
        mul_assign(psi, &self.half_kick);
        for step in 0..n_steps {
            self.kinetic_step(psi);
            if step + 1 == n_steps {
                mul_assign(psi, &self.half_kick);
            } else {
                mul_assign(psi, &self.full_kick);
            }
        }
        state.time += n_steps as f64 * self.dt;
        let edge = state.boundary_amplitude();
        if edge > BOUNDARY_TOLERANCE {
            log::warn!(
                "amplitude {edge:.3e} at the box edge at t = {:.3}; box too small",
                state.time
            );
        }
        Ok(())
    }

    /// Energy of `state` in this propagator's potential.
    pub fn energy(&mut self, state: &WaveState) -> f64 {
        self.spectral.kinetic(&state.amplitudes) + expectation_potential(state, &self.potential)
    }
}

fn mul_assign(psi: &mut [Complex64], factor: &[Complex64]) {
    psi.iter_mut().zip(factor).for_each(|(c, f)| *c *= f);
}

/// Propagates `state` for `n_steps` steps of size `dt` under H = p²/2 + U.
pub fn evolve(state: &WaveState, potential: &[f64], dt: f64, n_steps: usize) -> Result<WaveState> {
    check_positive("dt", dt)?;
    let mut prop = SplitOperator::new(&state.grid, potential, dt)?;
    let mut out = state.clone();
    prop.advance(&mut out, n_steps)?;
    Ok(out)
}

/// One row of a propagation trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub mean_x: f64,
    pub energy: f64,
    pub norm: f64,
}

/// Propagates while sampling (t, ⟨x⟩, ⟨H⟩, ‖ψ‖²) every `every` steps,
/// including the initial point.
pub fn evolve_with_trace(
    state: &WaveState,
    potential: &[f64],
    dt: f64,
    n_steps: usize,
    every: usize,
) -> Result<(WaveState, Vec<TracePoint>)> {
    check_positive("dt", dt)?;
    let every = every.max(1);
    let mut prop = SplitOperator::new(&state.grid, potential, dt)?;
    let mut psi = state.clone();
    let mut trace = Vec::with_capacity(n_steps / every + 2);
    let sample = |prop: &mut SplitOperator, psi: &WaveState| TracePoint {
        t: psi.time,
        mean_x: expectation_position(psi),
        energy: prop.energy(psi),
        norm: psi.norm_sqr(),
    };
    trace.push(sample(&mut prop, &psi));
    let mut done = 0;
    while done < n_steps {
        let chunk = every.min(n_steps - done);
        prop.advance(&mut psi, chunk)?;
        done += chunk;
        trace.push(sample(&mut prop, &psi));
    }
    Ok((psi, trace))
}

/// Largest change of the ⟨x⟩ trace when the step is halved, sampled at
/// `samples` equally spaced times over `duration`.
pub fn time_step_sensitivity(
    state: &WaveState,
    potential: &[f64],
    dt: f64,
    duration: f64,
    samples: usize,
) -> Result<f64> {
    check_positive("dt", dt)?;
    check_positive("duration", duration)?;
    let samples = samples.max(1);
    let steps_per_sample = ((duration / samples as f64) / dt).round().max(1.0) as usize;
    let mut coarse = SplitOperator::new(&state.grid, potential, dt)?;
    let mut fine = SplitOperator::new(&state.grid, potential, 0.5 * dt)?;
    let (mut a, mut b) = (state.clone(), state.clone());
    let mut worst = 0.0f64;
    for _ in 0..samples {
        coarse.advance(&mut a, steps_per_sample)?;
        fine.advance(&mut b, 2 * steps_per_sample)?;
        worst = worst.max((expectation_position(&a) - expectation_position(&b)).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    Linear,
    Smoothstep,
}

/// Pump-rate schedule η(t) for raising the barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSchedule {
    pub eta_start: f64,
    pub eta_end: f64,
    pub duration: f64,
    pub shape: RampShape,
}

impl RampSchedule {
    pub fn validate(&self) -> Result<()> {
        check_positive("ramp.duration", self.duration)?;
        for (field, v) in [("ramp.eta_start", self.eta_start), ("ramp.eta_end", self.eta_end)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn eta_at(&self, t: f64) -> f64 {
        let s = (t / self.duration).clamp(0.0, 1.0);
        let w = match self.shape {
            RampShape::Linear => s,
            RampShape::Smoothstep => s * s * (3.0 - 2.0 * s),
        };
        self.eta_start + (self.eta_end - self.eta_start) * w
    }
}

#[derive(Debug, Clone)]
pub struct RampOutcome {
    pub state: WaveState,
    /// |⟨ψ_ground(η_end)|ψ_final⟩|².
    pub adiabaticity: f64,
}

/// Propagates under U(x; η(t)) following `schedule`.
///
/// The potential is re-sampled at every step boundary, so the integrator
/// stays second order for smooth schedules.
pub fn ramp_evolve(
    state: &WaveState,
    params: &SystemParams,
    schedule: &RampSchedule,
    dt: f64,
) -> Result<RampOutcome> {
    params.validate()?;
    schedule.validate()?;
    check_positive("dt", dt)?;
    let grid = state.grid;
    let n_steps = (schedule.duration / dt).ceil().max(1.0) as usize;
    let dt = schedule.duration / n_steps as f64;

    let nodes = grid.nodes();
    let harmonic: Vec<f64> = nodes.iter().map(|x| 0.5 * x * x).collect();
    let shape: Vec<f64> = nodes
        .iter()
        .map(|&x| (params.detuning(x) / (0.5 * params.kappa)).atan())
        .collect();
    let potential_at = |t: f64| -> Vec<f64> {
        let eta = schedule.eta_at(t);
        let strength = 4.0 * eta * eta / params.kappa;
        harmonic
            .iter()
            .zip(&shape)
            .map(|(h, a)| h + strength * a)
            .collect()
    };

    let mut spectral = Spectral::new(&grid);
    let scale = 1.0 / grid.n as f64;
    let kinetic_phase: Vec<Complex64> = spectral
        .half_k2
        .iter()
        .map(|t| Complex64::from_polar(scale, -t * dt))
        .collect();
    let kick = |u: &[f64], f: f64| -> Vec<Complex64> {
        u.iter().map(|v| Complex64::from_polar(1.0, -v * dt * f)).collect()
    };

    let mut psi = state.clone();
    let t0 = psi.time;
    mul_assign(&mut psi.amplitudes, &kick(&potential_at(0.0), 0.5));
    for step in 0..n_steps {
        spectral.forward.process_with_scratch(&mut psi.amplitudes, &mut spectral.scratch);
        mul_assign(&mut psi.amplitudes, &kinetic_phase);
        spectral.inverse.process_with_scratch(&mut psi.amplitudes, &mut spectral.scratch);
        let t_next = (step + 1) as f64 * dt;
        let f = if step + 1 == n_steps { 0.5 } else { 1.0 };
        mul_assign(&mut psi.amplitudes, &kick(&potential_at(t_next), f));
    }
    psi.time = t0 + schedule.duration;

    let final_params = params.with_eta(schedule.eta_end);
    let eig = solve_stationary(&potential_on_grid(&final_params, &grid), &grid, 2)?;
    let ground = WaveState::from_real(&grid, &eig.states[0])?;
    let adiabaticity = ground.fidelity(&psi);
    Ok(RampOutcome {
        state: psi,
        adiabaticity,
    })
}
