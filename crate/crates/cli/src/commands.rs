use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::PathBuf;

use serde::Serialize;

use optotunnel::dynamics::{
    evolve_with_trace, propagation_grid, ramp_evolve, RampSchedule, WaveState, DEFAULT_TIME_STEP,
};
use optotunnel::measurement::{
    pulse_interval_for, pulse_nearest, zeno_scan, EnsembleStats, HistogramSpec,
    MeasurementConfig, Protocol, TrajectoryRecord, ZenoRow,
};
use optotunnel::potential::{
    effective_potential, intracavity_intensity, potential_on_grid, threshold_pump, well_geometry,
    WellGeometry,
};
use optotunnel::spectrum::{
    default_grid, localized_states, solve_extrapolated, solve_for_params, two_level_params,
    GridPolicy, Splitting, TwoLevel,
};
use optotunnel::sweep::{
    decoherence_margin, deep_tail_fit, linspace, rows_to_csv, run_sweep, DecoherenceMargin,
    LinearFit, SweepRow, SweepSpec,
};
use optotunnel::{EigenSolution, Error, Grid, SystemParams};

use crate::config::{Format, RampConfig, RunConfig};
use crate::output::{to_json, write, Csv};
use crate::svg::{Chart, Style};
use crate::Invalid;

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub formats: BTreeSet<Format>,
}

impl Context {
    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn emit(&self, f: Format, name: &str, contents: impl FnOnce() -> String) -> anyhow::Result<()> {
        if self.wants(f) {
            write(&self.out, name, &contents())?;
        }
        Ok(())
    }
}

/// Parameter-domain errors from the library are validation failures.
fn lib<T>(r: optotunnel::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter { .. }
        | Error::GridMismatch(_)
        | Error::BoxTooSmall { .. }
        | Error::TooManyStates { .. } => Invalid(e.to_string()).into(),
        other => anyhow::Error::new(other),
    })
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn spectrum_grid(ctx: &Context) -> anyhow::Result<Grid> {
    let params = &ctx.config.system;
    let g = ctx.config.grid;
    let policy = GridPolicy {
        max_spacing: g.spacing.unwrap_or(GridPolicy::default().max_spacing),
        headroom: None,
    };
    let auto = lib(default_grid(params, policy))?;
    match g.half_width {
        Some(half) => lib(Grid::symmetric_with_spacing(half, auto.spacing())),
        None => Ok(auto),
    }
}

#[derive(Serialize)]
struct Levels {
    e1: f64,
    e2: f64,
    tunneling: f64,
    tunneling_resolved: bool,
    levels_below_barrier: usize,
    two_level: TwoLevel,
    left_localization: Option<f64>,
}

fn levels_of(eig: &EigenSolution, geometry: &WellGeometry) -> Levels {
    let split = Splitting::classify(eig.energies[1] - eig.energies[0]);
    let pair = localized_states(eig).ok();
    Levels {
        e1: eig.energies[0],
        e2: eig.energies[1],
        tunneling: split.value,
        tunneling_resolved: split.resolved,
        levels_below_barrier: eig.levels_below(geometry.barrier_height.unwrap_or(f64::NEG_INFINITY)),
        two_level: two_level_params(eig),
        left_localization: pair.map(|p| p.left_localization.min(p.right_localization)),
    }
}

fn potential_chart(
    params: &SystemParams,
    geometry: &WellGeometry,
    grid: &Grid,
    eig: Option<&EigenSolution>,
    title: &str,
) -> Chart {
    let nodes = grid.nodes();
    let u = potential_on_grid(params, grid);
    let (reach, y_range) = match (geometry.x_min, geometry.barrier_height) {
        (Some(x_min), Some(eb)) => {
            let floor = effective_potential(params, x_min);
            let top = effective_potential(params, 0.0);
            ((2.0 * x_min).min(grid.x_hi), Some((floor - 0.2 * eb, top + 1.5 * eb)))
        }
        _ => (grid.x_hi.min(6.0), None),
    };
    let pick = |v: &[f64]| -> Vec<(f64, f64)> {
        nodes
            .iter()
            .zip(v)
            .filter(|(x, _)| x.abs() <= reach)
            .map(|(&x, &y)| (x, y))
            .collect()
    };
    let mut chart = Chart::new(title, "x / x_zpt", "energy / hbar omega_M").series("U(x)", pick(&u), Style::Line);
    chart.y_range = y_range.or_else(|| Some((u[grid.n / 2] - 0.5, u[grid.n / 2] + 8.0)));
    if let Some(eig) = eig {
        for (k, e) in eig.energies.iter().enumerate().take(4) {
            chart.levels.push((*e, format!("E{}", k + 1)));
        }
        if let (Ok(pair), Some(eb)) = (localized_states(eig), geometry.barrier_height) {
            let peak = pair.left.iter().map(|v| v * v).fold(0.0, f64::max);
            let scale = 0.6 * eb / peak;
            let floor = eig.energies[0];
            let dens = |v: &[f64]| -> Vec<f64> { v.iter().map(|c| floor + scale * c * c).collect() };
            chart = chart
                .series("|psi_L|^2", pick(&dens(&pair.left)), Style::Line)
                .series("|psi_R|^2", pick(&dens(&pair.right)), Style::Line);
        }
    }
    chart
}

pub fn potential(ctx: &Context) -> anyhow::Result<()> {
    let params = ctx.config.system;
    let grid = spectrum_grid(ctx)?;
    let geometry = well_geometry(&params);
    let eig = if geometry.is_double_well {
        Some(lib(solve_for_params(&params, &grid, 4))?)
    } else {
        None
    };

    #[derive(Serialize)]
    struct Summary<'a> {
        system: &'a SystemParams,
        threshold_eta: Option<f64>,
        geometry: &'a WellGeometry,
        barrier_top: f64,
        grid: &'a Grid,
        #[serde(skip_serializing_if = "Option::is_none")]
        levels: Option<Levels>,
    }
    let summary = Summary {
        system: &params,
        threshold_eta: threshold_pump(params.g2, params.kappa),
        geometry: &geometry,
        barrier_top: effective_potential(&params, 0.0),
        grid: &grid,
        levels: eig.as_ref().map(|e| levels_of(e, &geometry)),
    };
    ctx.emit(Format::Csv, "potential.csv", || {
        let mut csv = Csv::new(&["x", "U", "intensity"]);
        for x in grid.nodes() {
            csv.row(&[x, effective_potential(&params, x), intracavity_intensity(&params, x)]);
        }
        csv.finish()
    })?;
    ctx.emit(Format::Json, "potential.json", || to_json(&summary))?;
    ctx.emit(Format::Svg, "potential.svg", || {
        potential_chart(&params, &geometry, &grid, eig.as_ref(), "Effective potential").render()
    })?;
    Ok(())
}

pub fn spectrum(ctx: &Context) -> anyhow::Result<()> {
    let params = ctx.config.system;
    let grid = spectrum_grid(ctx)?;
    let geometry = well_geometry(&params);
    let spec = ctx.config.spectrum.unwrap_or(crate::config::SpectrumConfig {
        n_states: 4,
        extrapolate: false,
    });
    let eig = lib(solve_for_params(&params, &grid, spec.n_states))?;
    let extrapolated = if spec.extrapolate {
        Some(lib(solve_extrapolated(&params, &grid, spec.n_states))?)
    } else {
        None
    };

    #[derive(Serialize)]
    struct Extrapolated {
        energies: Vec<f64>,
        error_estimate: Vec<f64>,
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        system: &'a SystemParams,
        geometry: &'a WellGeometry,
        grid: &'a Grid,
        energies: &'a [f64],
        residuals: &'a [f64],
        #[serde(skip_serializing_if = "Option::is_none")]
        extrapolated: Option<Extrapolated>,
        #[serde(skip_serializing_if = "Option::is_none")]
        levels: Option<Levels>,
    }
    let summary = Summary {
        system: &params,
        geometry: &geometry,
        grid: &grid,
        energies: &eig.energies,
        residuals: &eig.residuals,
        extrapolated: extrapolated.map(|x| Extrapolated {
            energies: x.energies,
            error_estimate: x.error_estimate,
        }),
        levels: geometry.is_double_well.then(|| levels_of(&eig, &geometry)),
    };
    ctx.emit(Format::Json, "spectrum.json", || to_json(&summary))?;
    ctx.emit(Format::Csv, "states.csv", || {
        let names: Vec<String> = (1..=eig.len()).map(|k| format!("psi_{k}")).collect();
        let mut header = vec!["x"];
        header.extend(names.iter().map(String::as_str));
        let mut csv = Csv::new(&header);
        for i in 0..grid.n {
            let mut row = vec![grid.node(i)];
            row.extend(eig.states.iter().map(|s| s[i]));
            csv.row(&row);
        }
        csv.finish()
    })?;
    ctx.emit(Format::Svg, "spectrum.svg", || {
        potential_chart(&params, &geometry, &grid, Some(&eig), "Levels in the effective potential").render()
    })?;
    Ok(())
}

pub fn sweep(ctx: &Context) -> anyhow::Result<()> {
    let sc = ctx
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| invalid("`sweep` section is required for the sweep command"))?;
    let values = match (&sc.values, &sc.range) {
        (Some(v), _) => v.clone(),
        (None, Some(r)) => linspace(r.start, r.end, r.count),
        (None, None) => return Err(invalid("`sweep` needs `values` or `range`")),
    };
    let mut spec = SweepSpec::new(ctx.config.system, sc.field, values);
    spec.ground_reference = sc.ground_reference;
    if let Some(h) = ctx.config.grid.spacing {
        spec.grid.max_spacing = h;
    }
    lib(spec.validate())?;
    let rows = lib(run_sweep(&spec))?;
    let fit = deep_tail_fit(&rows);
    let margins: Option<Vec<Option<DecoherenceMargin>>> = sc.decoherence.map(|d| {
        rows.iter()
            .map(|r| r.tunneling.and_then(|j| decoherence_margin(j, d.quality_factor, d.omega_m).ok()))
            .collect()
    });

    #[derive(Serialize)]
    struct Summary<'a> {
        spec: &'a SweepSpec,
        rows: &'a [SweepRow],
        log_tunneling_fit: Option<LinearFit>,
        #[serde(skip_serializing_if = "Option::is_none")]
        decoherence: Option<Vec<Option<DecoherenceMargin>>>,
    }
    ctx.emit(Format::Csv, "sweep.csv", || rows_to_csv(&rows))?;
    ctx.emit(Format::Json, "sweep.json", || {
        to_json(&Summary {
            spec: &spec,
            rows: &rows,
            log_tunneling_fit: fit,
            decoherence: margins.clone(),
        })
    })?;
    if ctx.wants(Format::Svg) {
        let field = serde_json::to_value(sc.field)?
            .as_str()
            .unwrap_or("swept")
            .to_string();
        let pts = |f: &dyn Fn(&SweepRow) -> Option<f64>| -> Vec<(f64, f64)> {
            rows.iter().filter_map(|r| f(r).map(|y| (r.swept, y))).collect()
        };
        let mut j = Chart::new("Tunneling rate", &field, "J / omega_M").series(
            "J",
            pts(&|r| r.tunneling),
            Style::Line,
        );
        j.log_y = true;
        write(&ctx.out, "sweep_tunneling.svg", &j.render())?;
        let geo = Chart::new("Well geometry", &field, "x_min / x_zpt, E_b / E_ground")
            .series("x_min", pts(&|r| r.x_min), Style::Line)
            .series("E_b / E_ground", pts(&|r| r.ratio), Style::Line);
        write(&ctx.out, "sweep_geometry.svg", &geo.render())?;
    }
    Ok(())
}

/// Everything the measurement commands share.
struct Dynamics {
    params: SystemParams,
    grid: Grid,
    potential: Vec<f64>,
    x_min: f64,
    barrier_height: f64,
    e1: f64,
    tunneling: f64,
    start: WaveState,
    ramp: Option<RampReport>,
    max_prep_attempts: Option<usize>,
}

#[derive(Serialize, Clone, Copy)]
struct RampReport {
    schedule: RampSchedule,
    adiabaticity: f64,
}

impl Dynamics {
    fn new(ctx: &Context) -> anyhow::Result<Self> {
        let params = ctx.config.system;
        let geometry = well_geometry(&params);
        let (Some(x_min), Some(barrier_height)) = (geometry.x_min, geometry.barrier_height) else {
            return Err(invalid(format!(
                "measurement commands need a double well; D = {:e} at eta = {}",
                geometry.discriminant, params.eta
            )));
        };
        let g = ctx.config.grid;
        let half = match g.half_width {
            Some(h) => h,
            None => lib(default_grid(&params, GridPolicy::default()))?.x_hi,
        };
        let grid = lib(propagation_grid(half, g.spacing.unwrap_or(GridPolicy::default().max_spacing)))?;
        let eig = lib(solve_for_params(&params, &grid, 2))?;
        let potential = potential_on_grid(&params, &grid);
        let tunneling = eig.energies[1] - eig.energies[0];
        let mut start = lib(WaveState::from_real(&grid, &eig.states[0]))?;
        let ramp = match ctx.config.preparation.and_then(|p| p.ramp) {
            Some(r) => {
                let (state, report) = ramp_up(&params, &grid, &r)?;
                start = state;
                Some(report)
            }
            None => None,
        };
        Ok(Self {
            params,
            grid,
            potential,
            x_min,
            barrier_height,
            e1: eig.energies[0],
            tunneling,
            start,
            ramp,
            max_prep_attempts: ctx.config.measurement.and_then(|m| m.max_prep_attempts),
        })
    }

    fn measurement(&self, ctx: &Context) -> anyhow::Result<MeasurementConfig> {
        let m = ctx
            .config
            .measurement
            .ok_or_else(|| invalid("`measurement` section is required for this command"))?;
        let pulse_interval = match m.pulse_interval {
            Some(t) => t,
            None => lib(pulse_interval_for(self.tunneling, m.pulses_per_inverse_j.unwrap_or(20.0)))?,
        };
        let config = MeasurementConfig {
            sigma: m.sigma,
            n_pulses: m.n_pulses,
            pulse_interval,
            prep_sigma: m.prep_sigma.unwrap_or(self.x_min),
            seed: m.seed,
            time_step: m.time_step.unwrap_or(DEFAULT_TIME_STEP),
        };
        lib(config.validate())?;
        Ok(config)
    }

    fn protocol(&self, config: MeasurementConfig) -> anyhow::Result<Protocol> {
        let p = lib(Protocol::new(self.start.clone(), &self.potential, config))?;
        Ok(match self.max_prep_attempts {
            Some(n) => p.with_max_prep_attempts(n),
            None => p,
        })
    }

    fn energy_bound(&self) -> f64 {
        self.barrier_height + self.e1
    }
}

fn ramp_up(params: &SystemParams, grid: &Grid, r: &RampConfig) -> anyhow::Result<(WaveState, RampReport)> {
    let schedule = RampSchedule {
        eta_start: r.eta_start,
        eta_end: params.eta,
        duration: r.duration,
        shape: r.shape,
    };
    let initial_params = params.with_eta(r.eta_start);
    let eig = lib(optotunnel::spectrum::solve_stationary(
        &potential_on_grid(&initial_params, grid),
        grid,
        2,
    ))?;
    let initial = lib(WaveState::from_real(grid, &eig.states[0]))?;
    let out = lib(ramp_evolve(&initial, params, &schedule, r.time_step.unwrap_or(DEFAULT_TIME_STEP)))?;
    log::info!("barrier ramp finished with ground-state fidelity {:.6}", out.adiabaticity);
    let mut state = out.state;
    state.time = 0.0;
    Ok((
        state,
        RampReport {
            schedule,
            adiabaticity: out.adiabaticity,
        },
    ))
}

#[derive(Serialize)]
struct Physics {
    system: SystemParams,
    grid: Grid,
    x_min: f64,
    barrier_height: f64,
    e1: f64,
    tunneling: f64,
    energy_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ramp: Option<RampReport>,
}

fn physics(d: &Dynamics) -> Physics {
    Physics {
        system: d.params,
        grid: d.grid,
        x_min: d.x_min,
        barrier_height: d.barrier_height,
        e1: d.e1,
        tunneling: d.tunneling,
        energy_bound: d.energy_bound(),
        ramp: d.ramp,
    }
}

pub fn trajectory(ctx: &Context) -> anyhow::Result<()> {
    let d = Dynamics::new(ctx)?;
    let config = d.measurement(ctx)?;
    let protocol = d.protocol(config)?;
    let (prep, mut rng) = lib(protocol.prepare(0))?;
    let record = lib(protocol.run_from(prep.clone(), &mut rng, 0))?;

    let duration = if config.n_pulses > 0 {
        config.n_pulses as f64 * config.pulse_interval
    } else {
        PI / d.tunneling
    };
    let (_, dt) = config.steps_per_pulse();
    let n_steps = (duration / dt).round().max(1.0) as usize;
    let (_, reference) = lib(evolve_with_trace(
        &prep.state,
        &d.potential,
        dt,
        n_steps,
        (n_steps / 400).max(1),
    ))?;

    #[derive(Serialize)]
    struct Prep {
        side: optotunnel::measurement::Side,
        x_res: f64,
        localization: f64,
        attempts: usize,
        energy: f64,
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        physics: Physics,
        measurement: &'a MeasurementConfig,
        preparation: Prep,
        outcome_jumps: usize,
        max_energy: Option<f64>,
        below_energy_bound: bool,
        record: &'a TrajectoryRecord,
    }
    let max_energy = record.energies.iter().copied().reduce(f64::max);
    ctx.emit(Format::Csv, "trajectory.csv", || {
        let mut csv = Csv::new(&["t", "x_res", "mean_x", "energy"]);
        for k in 0..record.len() {
            let o = record.outcomes[k];
            csv.row(&[o.t, o.x_res, record.means[k], record.energies[k]]);
        }
        csv.finish()
    })?;
    ctx.emit(Format::Csv, "reference.csv", || {
        let mut csv = Csv::new(&["t", "mean_x"]);
        for p in &reference {
            csv.row(&[p.t, p.mean_x]);
        }
        csv.finish()
    })?;
    ctx.emit(Format::Json, "trajectory.json", || {
        to_json(&Summary {
            physics: physics(&d),
            measurement: &config,
            preparation: Prep {
                side: prep.side,
                x_res: prep.x_res,
                localization: prep.localization,
                attempts: prep.attempts,
                energy: record.initial_energy,
            },
            outcome_jumps: record.outcome_jumps(),
            max_energy,
            below_energy_bound: max_energy.is_none_or(|e| e < d.energy_bound()),
            record: &record,
        })
    })?;
    ctx.emit(Format::Svg, "trajectory.svg", || {
        let mut chart = Chart::new("Measurement record", "t omega_M", "x / x_zpt")
            .series(
                "x_res",
                record.outcomes.iter().map(|o| (o.t, o.x_res)).collect(),
                Style::Markers,
            )
            .series(
                "<x> after pulse",
                record.outcomes.iter().zip(&record.means).map(|(o, m)| (o.t, *m)).collect(),
                Style::Step,
            )
            .series(
                "coherent <x>",
                reference.iter().map(|p| (p.t, p.mean_x)).collect(),
                Style::Line,
            );
        chart.levels = vec![(d.x_min, "+x_min".into()), (-d.x_min, "-x_min".into())];
        chart.render()
    })?;
    Ok(())
}

pub fn ensemble(ctx: &Context) -> anyhow::Result<()> {
    let d = Dynamics::new(ctx)?;
    let config = d.measurement(ctx)?;
    let e = ctx
        .config
        .ensemble
        .ok_or_else(|| invalid("`ensemble` section is required for the ensemble command"))?;
    if config.n_pulses == 0 {
        return Err(invalid("the ensemble command needs `measurement.n_pulses` ≥ 1"));
    }
    let pulse = match (e.histogram_pulse, e.histogram_time) {
        (Some(p), _) => p,
        (None, Some(t)) => pulse_nearest(&config, t),
        (None, None) => config.n_pulses - 1,
    };
    let reach = e.range.unwrap_or(d.x_min + 3.0 * config.sigma);
    let spec = HistogramSpec {
        pulse,
        lo: -reach,
        hi: reach,
        bins: e.bins.unwrap_or(24),
    };
    let protocol = d.protocol(config)?;
    let ens = match (e.n_selected, e.post_select) {
        (Some(n), Some(side)) => lib(protocol.post_selected(n, side, &spec, e.n_traj))?,
        _ => lib(protocol.ensemble(e.n_traj, e.post_select, &spec))?,
    };
    let stats = &ens.stats;
    let bound = d.energy_bound();
    let below = ens
        .records
        .iter()
        .filter(|r| r.energies.iter().all(|&x| x < bound))
        .count();

    #[derive(Serialize)]
    struct Summary<'a> {
        physics: Physics,
        measurement: &'a MeasurementConfig,
        stats: &'a EnsembleStats,
        fraction_below_energy_bound: Option<f64>,
    }
    ctx.emit(Format::Csv, "histogram.csv", || {
        let mut csv = Csv::new(&["bin_lo", "bin_hi", "count"]);
        for (i, c) in stats.histogram.counts.iter().enumerate() {
            let (lo, hi) = stats.histogram.bin_edges(i);
            csv.raw_row(&[crate::output::num(lo), crate::output::num(hi), c.to_string()]);
        }
        csv.finish()
    })?;
    ctx.emit(Format::Csv, "mean_trace.csv", || {
        let mut csv = Csv::new(&["t", "mean_x", "mean_energy"]);
        for k in 0..stats.mean_trace.len() {
            csv.row(&[stats.times[k], stats.mean_trace[k], stats.mean_energy[k]]);
        }
        csv.finish()
    })?;
    ctx.emit(Format::Json, "ensemble.json", || {
        to_json(&Summary {
            physics: physics(&d),
            measurement: &config,
            stats,
            fraction_below_energy_bound: (!ens.records.is_empty())
                .then(|| below as f64 / ens.records.len() as f64),
        })
    })?;
    ctx.emit(Format::Svg, "histogram.svg", || {
        let h = &stats.histogram;
        let mut chart = Chart::new(
            &format!("Outcomes at t = {:.1}", stats.histogram_time),
            "x_res / x_zpt",
            "count",
        );
        chart.bars = (0..h.counts.len())
            .map(|i| {
                let (lo, hi) = h.bin_edges(i);
                (lo, hi, h.counts[i] as f64)
            })
            .collect();
        chart.render()
    })?;
    Ok(())
}

pub fn zeno(ctx: &Context) -> anyhow::Result<()> {
    let d = Dynamics::new(ctx)?;
    let z = ctx
        .config
        .zeno
        .clone()
        .ok_or_else(|| invalid("`zeno` section is required for the zeno command"))?;
    let m = ctx.config.measurement;
    let total = z.total_time.unwrap_or(PI / d.tunneling);
    let base = MeasurementConfig {
        sigma: z.sigma.unwrap_or(d.x_min / 3.0),
        n_pulses: 1,
        pulse_interval: total,
        prep_sigma: m.and_then(|m| m.prep_sigma).unwrap_or(d.x_min),
        seed: m.map_or(0, |m| m.seed),
        time_step: m.and_then(|m| m.time_step).unwrap_or(DEFAULT_TIME_STEP),
    };
    let protocol = d.protocol(base)?;
    let rows = lib(zeno_scan(&protocol, &z.multipliers, z.n_traj))?;

    #[derive(Serialize)]
    struct Summary<'a> {
        physics: Physics,
        base: &'a MeasurementConfig,
        total_time: f64,
        rows: &'a [ZenoRow],
    }
    ctx.emit(Format::Csv, "zeno.csv", || {
        let mut csv = Csv::new(&[
            "multiplier",
            "n_pulses",
            "pulse_interval",
            "n_traj",
            "crossing_fraction",
            "standard_error",
        ]);
        for r in &rows {
            csv.raw_row(&[
                r.multiplier.to_string(),
                r.n_pulses.to_string(),
                crate::output::num(r.pulse_interval),
                r.n_traj.to_string(),
                crate::output::num(r.crossing_fraction),
                crate::output::num(r.standard_error),
            ]);
        }
        csv.finish()
    })?;
    ctx.emit(Format::Json, "zeno.json", || {
        to_json(&Summary {
            physics: physics(&d),
            base: &base,
            total_time: total,
            rows: &rows,
        })
    })?;
    ctx.emit(Format::Svg, "zeno.svg", || {
        let mut chart = Chart::new("Well crossing vs pulse rate", "pulses in total time", "crossing fraction")
            .series(
                "crossing fraction",
                rows.iter().map(|r| (r.n_pulses as f64, r.crossing_fraction)).collect(),
                Style::Line,
            );
        chart.y_range = Some((0.0, 1.0));
        chart.render()
    })?;
    Ok(())
}
