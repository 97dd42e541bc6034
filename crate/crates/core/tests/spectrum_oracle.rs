//! Eigenvalues checked against an independent Numerov shooting solver.

use optotunnel::potential::{effective_potential, well_geometry, SystemParams};
use optotunnel::spectrum::{default_grid, solve_for_params, GridPolicy};
use optotunnel::sweep::{run_sweep, JFlag, SweepField, SweepSpec};

#[derive(Clone, Copy)]
enum Parity {
    Even,
    Odd,
}

/// ψ(L) after Numerov integration of ψ'' = 2(U − E)ψ from the origin.
fn shoot(u: &dyn Fn(f64) -> f64, e: f64, parity: Parity, length: f64, h: f64) -> f64 {
    let n = (length / h).ceil() as usize;
    let f = |x: f64| 2.0 * (u(x) - e);
    let (mut y0, mut y1) = match parity {
        // Taylor start at x = h consistent with the symmetry.
        Parity::Even => (1.0, 1.0 + 0.5 * h * h * f(0.0)),
        Parity::Odd => (0.0, h),
    };
    let c = h * h / 12.0;
    for i in 1..n {
        let (xm, x, xp) = ((i - 1) as f64 * h, i as f64 * h, (i + 1) as f64 * h);
        let y2 = (2.0 * y1 * (1.0 + 5.0 * c * f(x)) - y0 * (1.0 - c * f(xm))) / (1.0 - c * f(xp));
        y0 = y1;
        y1 = y2;
        if y1.abs() > 1e200 {
            y0 /= 1e200;
            y1 /= 1e200;
        }
    }
    y1
}

fn bisect(u: &dyn Fn(f64) -> f64, parity: Parity, mut lo: f64, mut hi: f64, length: f64) -> f64 {
    let h = 0.002;
    let s_lo = shoot(u, lo, parity, length, h).signum();
    assert_ne!(s_lo, shoot(u, hi, parity, length, h).signum(), "bracket");
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if shoot(u, mid, parity, length, h).signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn fig3() -> SystemParams {
    SystemParams::new(-2e-4, 176.785, 0.0, 10.0).unwrap()
}

#[test]
fn shooting_reproduces_harmonic_levels() {
    let u = |x: f64| 0.5 * x * x;
    let e0 = bisect(&u, Parity::Even, 0.1, 1.0, 10.0);
    let e1 = bisect(&u, Parity::Odd, 1.0, 2.0, 10.0);
    assert!((e0 - 0.5).abs() < 1e-9, "{e0}");
    assert!((e1 - 1.5).abs() < 1e-9, "{e1}");
}

fn fig3_doublet() -> (f64, f64) {
    let p = fig3();
    let u = move |x: f64| effective_potential(&p, x);
    let floor = effective_potential(&p, well_geometry(&p).x_min.unwrap());
    let e1 = bisect(&u, Parity::Even, floor, 0.005, 45.0);
    let e2 = bisect(&u, Parity::Odd, floor, 0.008, 45.0);
    (e1, e2)
}

#[test]
fn shooting_doublet_matches_frozen_reference() {
    // Reference values from an independent large-box finite-difference
    // calculation extrapolated in the spacing.
    let (e1, e2) = fig3_doublet();
    assert!((e1 - -0.001_352_4).abs() < 5e-8, "{e1}");
    assert!((e2 - 0.002_256_6).abs() < 5e-8, "{e2}");
}

#[test]
fn default_grid_splitting_matches_shooting() {
    let (e1, e2) = fig3_doublet();
    let p = fig3();
    let grid = default_grid(&p, GridPolicy::default()).unwrap();
    let eig = solve_for_params(&p, &grid, 2).unwrap();
    assert!((eig.energies[0] - e1).abs() < 1e-7);
    assert!((eig.energies[1] - e2).abs() < 1e-7);
    let j = eig.energies[1] - eig.energies[0];
    assert!(((j - (e2 - e1)) / (e2 - e1)).abs() < 5e-4, "{j} vs {}", e2 - e1);
}

#[test]
fn sweep_row_agrees_with_direct_solve() {
    let p = fig3();
    let rows = run_sweep(&SweepSpec::new(p, SweepField::Eta, vec![176.785])).unwrap();
    let r = &rows[0];
    let geo = well_geometry(&p);
    assert_eq!(r.j_flag, JFlag::Ok);
    assert_eq!(r.x_min, geo.x_min);
    assert_eq!(r.barrier_height, geo.barrier_height);
    let grid = default_grid(&p, GridPolicy::default()).unwrap();
    let eig = solve_for_params(&p, &grid, 2).unwrap();
    assert_eq!(r.e1, Some(eig.energies[0]));
    assert_eq!(r.tunneling, Some(eig.energies[1] - eig.energies[0]));
    let floor = effective_potential(&p, geo.x_min.unwrap());
    assert!((r.e_ground.unwrap() - (eig.energies[0] - floor)).abs() < 1e-15);
}
