//! Stationary states of H = p²/2 + U(x) on a grid.
//!
//! The kinetic term is the second-order central difference with Dirichlet
//! walls one node outside the sampled interior, so the problem reduces to the
//! lowest eigenpairs of a symmetric tridiagonal matrix. States are stored on
//! every grid node (edges are zero) and normalized under trapezoidal
//! quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::{effective_potential, potential_on_grid, well_geometry, SystemParams};
use crate::tridiag::SymTridiagonal;

/// Bound on ‖Hψ − Eψ‖/‖ψ‖ for every returned eigenpair.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Splittings below this are reported as unresolved rather than as numbers.
pub const SPLITTING_FLOOR: f64 = 100.0 * RESIDUAL_TOLERANCE;

/// Minimum distance between a well minimum and the box edge.
pub const BOX_MARGIN: f64 = 6.0;

/// Relative amplitude at the box edge targeted by [`default_grid`].
pub const TAIL_DECAY: f64 = 1e-12;

/// Localized states must hold at least this much probability on their side.
pub const LOCALIZATION_THRESHOLD: f64 = 0.9;

const PHASE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    /// Ascending eigenvalues of the discrete Hamiltonian.
    pub energies: Vec<f64>,
    /// One vector per energy, sampled on every node of `grid`.
    pub states: Vec<Vec<f64>>,
    pub grid: Grid,
    /// ‖Hψᵢ − Eᵢψᵢ‖/‖ψᵢ‖ in the discrete operator.
    pub residuals: Vec<f64>,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// ⟨ψᵢ|ψⱼ⟩ under trapezoidal quadrature.
    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        overlap(&self.grid, &self.states[i], &self.states[j])
    }

    /// Number of levels with energy strictly below `energy`.
    pub fn levels_below(&self, energy: f64) -> usize {
        self.energies.iter().take_while(|&&e| e < energy).count()
    }
}

pub(crate) fn overlap(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    grid.integrate(&prod)
}

fn hamiltonian(potential: &[f64], grid: &Grid) -> SymTridiagonal {
    let h = grid.spacing();
    let kinetic = 0.5 / (h * h);
    let interior = &potential[1..grid.n - 1];
    let diag = interior.iter().map(|u| 2.0 * kinetic + u).collect();
    let off = vec![-kinetic; interior.len() - 1];
    SymTridiagonal::new(diag, off)
}

/// Lowest `n_states` eigenpairs of −(1/2)d²/dx² + U on `grid`.
///
/// Each state's sign is fixed so that its leftmost local extremum with
/// magnitude above 10⁻⁶ is positive.
pub fn solve_stationary(potential: &[f64], grid: &Grid, n_states: usize) -> Result<EigenSolution> {
    if potential.len() != grid.n {
        return Err(Error::GridMismatch(format!(
            "potential has {} samples, grid has {} nodes",
            potential.len(),
            grid.n
        )));
    }
    if n_states < 2 {
        return Err(Error::InvalidParameter {
            field: "n_states",
            reason: format!("need at least 2 states, got {n_states}"),
        });
    }
    let capacity = grid.n - 2;
    if n_states > capacity {
        return Err(Error::TooManyStates {
            requested: n_states,
            capacity,
        });
    }

    let op = hamiltonian(potential, grid);
    let energies = op.lowest_eigenvalues(n_states);
    let inv_sqrt_h = 1.0 / grid.spacing().sqrt();

    let mut unit_vectors: Vec<Vec<f64>> = Vec::with_capacity(n_states);
    let mut residuals = Vec::with_capacity(n_states);
    for (index, &e) in energies.iter().enumerate() {
        let v = op.eigenvector(e, &unit_vectors, 12);
        let residual = op.residual(e, &v);
        if !(residual <= RESIDUAL_TOLERANCE) {
            return Err(Error::NoConvergence { index, residual });
        }
        residuals.push(residual);
        unit_vectors.push(v);
    }

    let states = unit_vectors
        .into_iter()
        .map(|v| {
            let mut psi = Vec::with_capacity(grid.n);
            psi.push(0.0);
            psi.extend(v.iter().map(|c| c * inv_sqrt_h));
            psi.push(0.0);
            fix_phase(&mut psi);
            psi
        })
        .collect();

    Ok(EigenSolution {
        energies,
        states,
        grid: *grid,
        residuals,
    })
}

fn fix_phase(psi: &mut [f64]) {
    let n = psi.len();
    let extremum = (1..n - 1).find(|&i| {
        let a = psi[i].abs();
        a > PHASE_THRESHOLD && a >= psi[i - 1].abs() && a >= psi[i + 1].abs()
    });
    if let Some(i) = extremum {
        if psi[i] < 0.0 {
            psi.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

/// Checks that a double-well box leaves [`BOX_MARGIN`] beyond each minimum.
pub fn check_box(params: &SystemParams, grid: &Grid) -> Result<()> {
    let geometry = well_geometry(params);
    if let Some(x_min) = geometry.x_min {
        if grid.x_hi < x_min + BOX_MARGIN || grid.x_lo > -x_min - BOX_MARGIN {
            return Err(Error::BoxTooSmall {
                x_lo: grid.x_lo,
                x_hi: grid.x_hi,
                x_min,
                margin: BOX_MARGIN,
            });
        }
    }
    Ok(())
}

/// Samples the effective potential and solves, validating the box first.
pub fn solve_for_params(params: &SystemParams, grid: &Grid, n_states: usize) -> Result<EigenSolution> {
    params.validate()?;
    check_box(params, grid)?;
    solve_stationary(&potential_on_grid(params, grid), grid, n_states)
}

/// Eigenvalues extrapolated from two grids (spacing h and h/2).
///
/// The finite-difference error is a power series in h² whose leading term
/// cancels in (4E(h/2) − E(h))/3; the states are those of the finer grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedSpectrum {
    pub energies: Vec<f64>,
    /// |E(h/2) − E(h)|/3, the size of the removed leading error term.
    pub error_estimate: Vec<f64>,
    pub coarse: EigenSolution,
    pub fine: EigenSolution,
}

pub fn solve_extrapolated(
    params: &SystemParams,
    grid: &Grid,
    n_states: usize,
) -> Result<ExtrapolatedSpectrum> {
    let coarse = solve_for_params(params, grid, n_states)?;
    let fine = solve_for_params(params, &grid.refined(), n_states)?;
    let energies = coarse
        .energies
        .iter()
        .zip(&fine.energies)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    let error_estimate = coarse
        .energies
        .iter()
        .zip(&fine.energies)
        .map(|(c, f)| (f - c).abs() / 3.0)
        .collect();
    Ok(ExtrapolatedSpectrum {
        energies,
        error_estimate,
        coarse,
        fine,
    })
}

/// J = E₂ − E₁.
pub fn tunneling_rate(eig: &EigenSolution) -> f64 {
    (eig.energies[1] - eig.energies[0]).max(0.0)
}

/// A level splitting together with whether it is numerically resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub value: f64,
    pub resolved: bool,
}

impl Splitting {
    pub fn classify(value: f64) -> Self {
        Self {
            value,
            resolved: value >= SPLITTING_FLOOR,
        }
    }

    /// The value, only when it carries a numeric claim.
    pub fn resolved_value(&self) -> Option<f64> {
        self.resolved.then_some(self.value)
    }
}

/// Degenerate two-mode description of the lowest doublet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevel {
    /// E_L = E_R = (E₁ + E₂)/2.
    pub well_energy: f64,
    /// J = E₂ − E₁.
    pub tunneling: f64,
}

pub fn two_level_params(eig: &EigenSolution) -> TwoLevel {
    TwoLevel {
        well_energy: 0.5 * (eig.energies[0] + eig.energies[1]),
        tunneling: tunneling_rate(eig),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedPair {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Probability of `left` at x < 0.
    pub left_localization: f64,
    /// Probability of `right` at x > 0.
    pub right_localization: f64,
}

/// ψ_{L,R} = (ψ₁ ± ψ₂)/√2, with the sign assignment that puts ψ_L on the left.
pub fn localized_states(eig: &EigenSolution) -> Result<LocalizedPair> {
    if eig.len() < 2 {
        return Err(Error::InvalidParameter {
            field: "eig",
            reason: "need at least two states".into(),
        });
    }
    let grid = &eig.grid;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus: Vec<f64> = eig.states[0]
        .iter()
        .zip(&eig.states[1])
        .map(|(a, b)| s * (a + b))
        .collect();
    let minus: Vec<f64> = eig.states[0]
        .iter()
        .zip(&eig.states[1])
        .map(|(a, b)| s * (a - b))
        .collect();
    let left_of = |v: &[f64]| {
        let p: Vec<f64> = v.iter().map(|c| c * c).collect();
        (grid.integrate_left(&p), grid.integrate(&p))
    };
    let (plus_left, plus_total) = left_of(&plus);
    let (minus_left, minus_total) = left_of(&minus);
    let plus_frac = plus_left / plus_total;
    let minus_frac = minus_left / minus_total;

    let (left, right, l_loc, r_loc) = if plus_frac >= minus_frac {
        (plus, minus, plus_frac, 1.0 - minus_frac)
    } else {
        (minus, plus, minus_frac, 1.0 - plus_frac)
    };
    if l_loc < LOCALIZATION_THRESHOLD || r_loc < LOCALIZATION_THRESHOLD {
        return Err(Error::NotLocalized {
            best: l_loc.min(r_loc),
        });
    }
    Ok(LocalizedPair {
        left,
        right,
        left_localization: l_loc,
        right_localization: r_loc,
    })
}

/// Box half-width beyond which a state of energy `ceiling` has decayed by
/// [`TAIL_DECAY`], from the WKB estimate exp(−∫√(2(U − E))dx) past the outer
/// turning point.
pub fn tail_half_width(params: &SystemParams, ceiling: f64) -> f64 {
    let target = -TAIL_DECAY.ln();
    let step = 0.01;
    // Start at the well minimum so the crossing found is the outer one.
    let mut x = well_geometry(params).x_min.unwrap_or(0.0);
    while effective_potential(params, x) < ceiling {
        x += step;
        if x > 1e6 {
            return x;
        }
    }
    let mut action = 0.0;
    while action < target {
        let u = effective_potential(params, x + 0.5 * step);
        action += (2.0 * (u - ceiling).max(0.0)).sqrt() * step;
        x += step;
        if x > 1e6 {
            break;
        }
    }
    x
}

/// Grid sizing used when the caller gives no explicit box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    /// Upper bound on the node spacing.
    pub max_spacing: f64,
    /// Energy above the barrier top (or above U(0) for a single well) whose
    /// tails must fit in the box.
    pub headroom: Option<f64>,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            max_spacing: 0.02,
            headroom: None,
        }
    }
}

/// Symmetric grid sized for the low-lying states of `params`.
///
/// The half-width is the larger of x_min + 8 and the WKB tail estimate
/// at U(0) + headroom, where headroom defaults to E_b for a double well and
/// to 6 (six oscillator levels) for a single well; single wells also keep at
/// least ±10. The spacing is also kept below x_min/200.
pub fn default_grid(params: &SystemParams, policy: GridPolicy) -> Result<Grid> {
    params.validate()?;
    let geometry = well_geometry(params);
    let top = effective_potential(params, 0.0);
    let (half_width, spacing) = match (geometry.x_min, geometry.barrier_height) {
        (Some(x_min), Some(eb)) => {
            let headroom = policy.headroom.unwrap_or(eb);
            let half = (x_min + 8.0).max(tail_half_width(params, top + headroom));
            (half, policy.max_spacing.min(x_min / 200.0))
        }
        _ => {
            let headroom = policy.headroom.unwrap_or(6.0);
            let half = tail_half_width(params, top + headroom).max(10.0);
            (half, policy.max_spacing)
        }
    };
    Grid::symmetric_with_spacing(half_width, spacing)
}
