//! End-to-end acceptance checks. Each check prints one PASS/FAIL line;
//! the binary exits nonzero if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use optotunnel::dynamics::{
    evolve_with_trace, expectation_energy, propagation_grid, time_step_sensitivity, WaveState,
};
use optotunnel::measurement::{
    pulse_interval_for, pulse_nearest, stream_rng, weak_measure, zeno_scan, HistogramSpec,
    MeasurementConfig, Protocol, Side,
};
use optotunnel::potential::{
    effective_potential, potential_on_grid, threshold_pump, well_geometry, SystemParams,
};
use optotunnel::spectrum::{
    default_grid, localized_states, solve_extrapolated, solve_for_params, GridPolicy,
};
use optotunnel::sweep::{
    decoherence_margin, deep_tail_fit, linspace, run_sweep, JFlag, SweepField, SweepSpec,
};
use optotunnel::Grid;

const G2: f64 = -2e-4;
const KAPPA: f64 = 10.0;
const ETA_FIG3: f64 = 176.785;
const SIGMA_FIG5: f64 = 50.0;
/// Spacing and time step used for all trajectory work; both are checked
/// against refinement in check 6.
const DYN_SPACING: f64 = 0.08;
const DYN_STEP: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fig3() -> SystemParams {
    SystemParams::new(G2, ETA_FIG3, 0.0, KAPPA).unwrap()
}

/// Fig. 3 system on the trajectory grid.
struct Setup {
    grid: Grid,
    potential: Vec<f64>,
    ground: WaveState,
    left: WaveState,
    right: WaveState,
    e1: f64,
    j: f64,
    x_min: f64,
    e_b: f64,
}

fn setup() -> Setup {
    let params = fig3();
    let half = default_grid(&params, GridPolicy::default()).unwrap().x_hi;
    let grid = propagation_grid(half, DYN_SPACING).unwrap();
    let eig = solve_for_params(&params, &grid, 2).unwrap();
    let pair = localized_states(&eig).unwrap();
    let geo = well_geometry(&params);
    Setup {
        potential: potential_on_grid(&params, &grid),
        ground: WaveState::from_real(&grid, &eig.states[0]).unwrap(),
        left: WaveState::from_real(&grid, &pair.left).unwrap(),
        right: WaveState::from_real(&grid, &pair.right).unwrap(),
        e1: eig.energies[0],
        j: eig.energies[1] - eig.energies[0],
        x_min: geo.x_min.unwrap(),
        e_b: geo.barrier_height.unwrap(),
        grid,
    }
}

fn fig5_config(s: &Setup, n_pulses: usize, seed: u64) -> MeasurementConfig {
    MeasurementConfig {
        sigma: SIGMA_FIG5,
        n_pulses,
        pulse_interval: pulse_interval_for(s.j, 20.0).unwrap(),
        prep_sigma: s.x_min,
        seed,
        time_step: DYN_STEP,
    }
}

fn c1_harmonic() -> Outcome {
    let params = SystemParams::new(G2, 0.0, 0.0, KAPPA).unwrap();
    let grid = default_grid(&params, GridPolicy::default()).unwrap();
    let ext = solve_extrapolated(&params, &grid, 6).unwrap();
    let worst = ext
        .energies
        .iter()
        .enumerate()
        .map(|(k, e)| (e - (k as f64 + 0.5)).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-6,
        format!("max |E_n - (n - 1/2)| = {worst:.2e} on {} nodes", grid.n),
    )
}

/// U'(x) written out independently of the library.
fn potential_slope(x: f64) -> f64 {
    let p = fig3();
    let a = 2.0 * p.detuning(x) / p.kappa;
    x + 4.0 * p.eta * p.eta / p.kappa * (4.0 * p.g2 * x / p.kappa) / (1.0 + a * a)
}

fn c2_geometry() -> Outcome {
    let p = fig3();
    let geo = well_geometry(&p);
    let (mut lo, mut hi) = (1.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if potential_slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_num = 0.5 * (lo + hi);
    let eb_num = effective_potential(&p, 0.0) - effective_potential(&p, x_num);
    let dx = (x_num - geo.x_min.unwrap()).abs();
    let deb = (eb_num - geo.barrier_height.unwrap()).abs();
    let eta_star = threshold_pump(G2, KAPPA).unwrap();
    let exact = 31250f64.sqrt();
    let deta = (eta_star - exact).abs();
    let below = well_geometry(&p.with_eta(eta_star * (1.0 - 1e-12)));
    let above = well_geometry(&p.with_eta(eta_star * (1.0 + 1e-12)));
    outcome(
        dx <= 1e-9
            && deb <= 1e-10
            && deta <= 2.0 * f64::EPSILON * exact
            && !below.is_double_well
            && above.is_double_well,
        format!("|dx| = {dx:.1e}, |dE_b| = {deb:.1e}, eta* = {eta_star:.17}"),
    )
}

fn c3_fig3_structure() -> Outcome {
    let p = fig3();
    let grid = default_grid(&p, GridPolicy::default()).unwrap();
    let eig = solve_for_params(&p, &grid, 4).unwrap();
    let e_b = well_geometry(&p).barrier_height.unwrap();
    let below = eig.levels_below(e_b);
    let mid = grid.n / 2;
    let parity = |k: usize| -> f64 {
        (0..grid.n)
            .map(|i| eig.states[k][i] - eig.states[k][grid.mirror(i)])
            .map(f64::abs)
            .fold(0.0, f64::max)
    };
    let odd_residual = (0..grid.n)
        .map(|i| (eig.states[1][i] + eig.states[1][grid.mirror(i)]).abs())
        .fold(0.0, f64::max);
    let even = parity(0) < 1e-8 && eig.states[0][mid].abs() > 1e-6;
    let odd = odd_residual < 1e-8;
    let loc = localized_states(&eig);
    let (l_loc, r_loc) = loc
        .as_ref()
        .map(|l| (l.left_localization, l.right_localization))
        .unwrap_or((0.0, 0.0));
    let j = eig.energies[1] - eig.energies[0];
    let fine = solve_for_params(&p, &grid.refined(), 2).unwrap();
    let j_fine = fine.energies[1] - fine.energies[0];
    let wide = Grid::symmetric_with_spacing(2.0 * grid.x_hi, grid.spacing()).unwrap();
    let wide_eig = solve_for_params(&p, &wide, 2).unwrap();
    let j_wide = wide_eig.energies[1] - wide_eig.energies[0];
    let drift = ((j_fine - j).abs() / j).max((j_wide - j).abs() / j);
    let converged = drift < 5e-4;
    outcome(
        below == 2 && even && odd && l_loc.min(r_loc) >= 0.99 && converged,
        format!(
            "levels below E_b: {below}, even/odd: {even}/{odd}, localization {:.4}, \
             J = {j:.6e} (refined {j_fine:.6e}, wide box {j_wide:.6e})",
            l_loc.min(r_loc)
        ),
    )
}

fn eta_values() -> Vec<f64> {
    linspace(176.7768, 176.83, 55)
}

fn c4_fig4() -> Outcome {
    let spec = SweepSpec::new(fig3(), SweepField::Eta, eta_values());
    let rows = run_sweep(&spec).unwrap();
    let resolved: Vec<f64> = rows.iter().filter_map(|r| r.tunneling).collect();
    let decreasing = resolved.windows(2).all(|w| w[1] < w[0]) && resolved.len() >= 10;
    let fit = deep_tail_fit(&rows);
    let r2 = fit.map(|f| f.r_squared).unwrap_or(0.0);
    let n_fit = fit.map(|f| f.n).unwrap_or(0);
    outcome(
        decreasing && r2 >= 0.98 && n_fit >= 5,
        format!(
            "{} resolved rows from J = {:.3e} to {:.3e}, strictly decreasing: {decreasing}; \
             ln J fit over {n_fit} deep-tail rows R^2 = {r2:.5}",
            resolved.len(),
            resolved.first().copied().unwrap_or(f64::NAN),
            resolved.last().copied().unwrap_or(f64::NAN),
        ),
    )
}

fn c5_fig2() -> Outcome {
    let mut values = linspace(176.70, 176.7766, 8);
    values.extend(eta_values());
    let spec = SweepSpec::new(fig3(), SweepField::Eta, values);
    let rows = run_sweep(&spec).unwrap();
    let single = rows.iter().filter(|r| r.j_flag == JFlag::SingleWell).count();
    let double: Vec<_> = rows.iter().filter(|r| r.x_min.is_some()).collect();
    let x_inc = double
        .windows(2)
        .all(|w| w[1].x_min.unwrap() > w[0].x_min.unwrap());
    let ratios: Vec<f64> = double.iter().filter_map(|r| r.ratio).collect();
    let r_inc = ratios.windows(2).all(|w| w[1] > w[0]);
    let crosses = ratios.first().is_some_and(|&r| r < 1.0) && ratios.last().is_some_and(|&r| r > 1.0);
    outcome(
        single > 0 && x_inc && r_inc && crosses,
        format!(
            "{single} single-well rows; x_min increasing: {x_inc}; ratio {:.3e} -> {:.3e}, \
             increasing: {r_inc}, crosses 1: {crosses}",
            ratios.first().copied().unwrap_or(f64::NAN),
            ratios.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

fn c6_two_level(s: &Setup) -> Outcome {
    let t_end = PI / s.j;
    let n_steps = (t_end / DYN_STEP).ceil() as usize;
    let dt = t_end / n_steps as f64;
    let (fin, trace) = evolve_with_trace(&s.left, &s.potential, dt, n_steps, 10).unwrap();
    let x_bar = trace[0].mean_x;
    let dev = trace
        .iter()
        .map(|p| (p.mean_x - x_bar * (s.j * p.t).cos()).abs() / x_bar.abs())
        .fold(0.0, f64::max);
    let overlap = fin.fidelity(&s.right);
    let drift = trace
        .iter()
        .map(|p| (p.norm - trace[0].norm).abs())
        .fold(0.0, f64::max);
    let sens = time_step_sensitivity(&s.left, &s.potential, DYN_STEP, t_end, 20).unwrap();
    outcome(
        dev <= 0.05 && overlap >= 0.95 && drift <= 1e-6,
        format!(
            "max rel. dev {dev:.2e}, |<psi_R|psi(pi/J)>|^2 = {overlap:.6}, norm drift {drift:.1e}, \
             dt-halving change in <x> {sens:.1e}"
        ),
    )
}

fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var)
}

fn c7_statistics(s: &Setup) -> Outcome {
    let n = 10_000;
    let mut rng = stream_rng(7001, 0);
    let state = &s.left;
    let p = state.probabilities();
    let xs = s.grid.nodes();
    let mean_x = s.grid.integrate(&xs.iter().zip(&p).map(|(x, q)| x * q).collect::<Vec<_>>());
    let var_x = s.grid.integrate(
        &xs.iter()
            .zip(&p)
            .map(|(x, q)| (x - mean_x).powi(2) * q)
            .collect::<Vec<_>>(),
    );
    let samples: Vec<f64> = (0..n)
        .map(|_| weak_measure(state, SIGMA_FIG5, &mut rng).unwrap().0)
        .collect();
    let (m, v) = moments(&samples);
    let want_var = var_x + SIGMA_FIG5 * SIGMA_FIG5 / 2.0;
    let se_mean = (v / n as f64).sqrt();
    let fourth = samples.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
    let se_var = ((fourth - v * v) / n as f64).sqrt();
    let mean_ok = (m - mean_x).abs() <= 3.0 * se_mean;
    let var_ok = (v - want_var).abs() <= 3.0 * se_var;

    let strong = s.x_min / 10.0;
    let mut rng = stream_rng(7002, 0);
    let left = (0..n)
        .filter(|_| weak_measure(&s.ground, strong, &mut rng).unwrap().0 < 0.0)
        .count();
    let frac = left as f64 / n as f64;
    let split_ok = (frac - 0.5).abs() <= 3.0 * (0.25 / n as f64).sqrt();
    outcome(
        mean_ok && var_ok && split_ok,
        format!(
            "E[x_res] = {m:.3} vs {mean_x:.3} (se {se_mean:.2}), Var = {v:.1} vs {want_var:.1} \
             (se {se_var:.1}); left fraction {frac:.4}"
        ),
    )
}

fn c8_back_action(s: &Setup) -> Outcome {
    let n = 10_000;
    let mut rng = stream_rng(8001, 0);
    let e0 = expectation_energy(&s.ground, &s.potential);
    let gain: f64 = (0..n)
        .map(|_| {
            let (_, post) = weak_measure(&s.ground, SIGMA_FIG5, &mut rng).unwrap();
            expectation_energy(&post, &s.potential) - e0
        })
        .sum::<f64>()
        / n as f64;
    let want = 1.0 / (4.0 * SIGMA_FIG5 * SIGMA_FIG5);
    let gain_ok = ((gain - want) / want).abs() <= 0.05;

    let protocol = Protocol::new(s.ground.clone(), &s.potential, fig5_config(s, 20, 8002)).unwrap();
    let bound = s.e_b + s.e1;
    let n_traj = 200;
    let below = (0..n_traj as u64)
        .filter(|&i| {
            let r = protocol.trajectory(i).unwrap();
            r.energies.iter().all(|&e| e < bound)
        })
        .count();
    let frac = below as f64 / n_traj as f64;
    outcome(
        gain_ok && frac >= 0.95,
        format!(
            "gain per pulse {gain:.4e} vs {want:.4e} ({:+.1}%); <H> < E_b + E_1 = {bound:.5} \
             at every pulse in {below}/{n_traj} trajectories",
            100.0 * (gain - want) / want
        ),
    )
}

fn c9_ensemble(s: &Setup) -> Outcome {
    let t_half = PI / s.j;
    let probe = fig5_config(s, 1, 9001);
    let n_pulses = pulse_nearest(&MeasurementConfig { n_pulses: usize::MAX, ..probe }, t_half) + 1;
    let config = fig5_config(s, n_pulses, 9001);
    let protocol = Protocol::new(s.ground.clone(), &s.potential, config).unwrap();
    let reach = s.x_min + 3.0 * SIGMA_FIG5;
    let spec = HistogramSpec {
        pulse: n_pulses - 1,
        lo: -reach,
        hi: reach,
        bins: 24,
    };
    let ens = protocol.post_selected(200, Side::Left, &spec, 2000).unwrap();
    let st = &ens.stats;
    let right = st.right_fraction.unwrap_or(0.0);
    let total = st.histogram.total() as usize;
    let again: Vec<_> = (0..3).map(|k| protocol.trajectory(ens.records[k].stream).unwrap()).collect();
    let deterministic = again.iter().zip(&ens.records).all(|(a, b)| a == b);
    outcome(
        st.n_selected == 200 && total == 200 && right > 0.5 && deterministic,
        format!(
            "{} selected of {} run; histogram at t = {:.1} (pi/J = {t_half:.1}), \
             right-of-origin fraction {right:.3}; reruns identical: {deterministic}",
            st.n_selected, st.n_traj, st.histogram_time
        ),
    )
}

fn c10_zeno(s: &Setup) -> Outcome {
    let config = MeasurementConfig {
        sigma: s.x_min / 3.0,
        n_pulses: 1,
        pulse_interval: PI / s.j,
        prep_sigma: s.x_min,
        seed: 10_001,
        time_step: DYN_STEP,
    };
    let protocol = Protocol::new(s.ground.clone(), &s.potential, config).unwrap();
    let rows = zeno_scan(&protocol, &[1, 4, 16], 200).unwrap();
    let p: Vec<f64> = rows.iter().map(|r| r.crossing_fraction).collect();
    let monotone = p.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        monotone,
        format!(
            "crossing fraction at t = pi/J for m = 1, 4, 16: {}",
            rows.iter()
                .map(|r| format!("{:.3} +- {:.3}", r.crossing_fraction, r.standard_error))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn c11_margin() -> Outcome {
    let omega_m = 2.0 * PI * 1e5;
    let q = omega_m / 0.5;
    let m = decoherence_margin(100.0 / omega_m, q, omega_m).unwrap();
    let ok = (m.j_si - 100.0).abs() <= 1e-9 && (m.margin - 200.0).abs() <= 1e-9 && !m.decoherence_dominated;
    outcome(ok, format!("J_SI = {:.6} Hz, margin = {:.6}", m.j_si, m.margin))
}

fn run(number: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    let in_time = elapsed <= budget;
    let pass = pass && in_time;
    println!(
        "{} [{number:>2}] {name}: {detail} ({:.2} s of {} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut results = vec![
        run(1, "harmonic limit", secs(5), c1_harmonic),
        run(2, "closed-form geometry", secs(1), c2_geometry),
        run(3, "double-well structure", secs(30), c3_fig3_structure),
        run(4, "tunneling-rate sweep", secs(300), c4_fig4),
        run(5, "geometry sweep", secs(300), c5_fig2),
    ];
    let t = Instant::now();
    let s = setup();
    println!(
        "     trajectory grid: {} nodes, h = {:.4}, J = {:.6e}, x_min = {:.4} ({:.2} s)",
        s.grid.n,
        s.grid.spacing(),
        s.j,
        s.x_min,
        t.elapsed().as_secs_f64()
    );
    results.push(run(6, "two-level dynamics", secs(120), || c6_two_level(&s)));
    results.push(run(7, "measurement statistics", secs(120), || c7_statistics(&s)));
    results.push(run(8, "back-action law", secs(600), || c8_back_action(&s)));
    results.push(run(9, "post-selected ensemble", secs(600), || c9_ensemble(&s)));
    results.push(run(10, "Zeno monotonicity", secs(600), || c10_zeno(&s)));
    results.push(run(11, "decoherence margin", secs(1), c11_margin));
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
