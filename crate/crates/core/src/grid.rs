//! Uniform one-dimensional grids and the trapezoidal quadrature used on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[x_lo, x_hi]` with `n` nodes, both edges included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
            return Err(Error::InvalidParameter {
                field: "grid",
                reason: format!("need finite x_lo < x_hi, got [{x_lo}, {x_hi}]"),
            });
        }
        if n < 3 {
            return Err(Error::InvalidParameter {
                field: "grid.n",
                reason: format!("need at least 3 nodes, got {n}"),
            });
        }
        Ok(Self { x_lo, x_hi, n })
    }

    /// Grid on `[-half_width, half_width]`. An odd `n` puts a node on the origin.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    /// Symmetric grid whose spacing does not exceed `max_spacing`, with an odd
    /// node count so the origin is a node.
    pub fn symmetric_with_spacing(half_width: f64, max_spacing: f64) -> Result<Self> {
        if !(max_spacing.is_finite() && max_spacing > 0.0) {
            return Err(Error::InvalidParameter {
                field: "grid.spacing",
                reason: format!("must be positive, got {max_spacing}"),
            });
        }
        let intervals = (2.0 * half_width / max_spacing).ceil().max(2.0) as usize;
        let intervals = intervals + intervals % 2;
        Self::symmetric(half_width, intervals + 1)
    }

    pub fn spacing(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        // Weighting both edges by exact integers keeps symmetric grids
        // mirror-symmetric in floating point.
        let last = self.n - 1;
        match i {
            0 => self.x_lo,
            i if i == last => self.x_hi,
            _ => (self.x_lo * (last - i) as f64 + self.x_hi * i as f64) / last as f64,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Same box with the spacing halved (`2n - 1` nodes).
    pub fn refined(&self) -> Self {
        Self {
            x_lo: self.x_lo,
            x_hi: self.x_hi,
            n: 2 * self.n - 1,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.x_lo == -self.x_hi
    }

    /// Trapezoidal quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == 0 || i == self.n - 1 {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoidal integral of sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let h = self.spacing();
        let inner: f64 = values[1..self.n - 1].iter().sum();
        h * (inner + 0.5 * (values[0] + values[self.n - 1]))
    }

    /// Trapezoidal integral restricted to `x < 0`; a node sitting exactly on
    /// the origin contributes half its weight.
    pub fn integrate_left(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        (0..self.n)
            .map(|i| {
                let x = self.node(i);
                let side = if x < 0.0 {
                    1.0
                } else if x == 0.0 {
                    0.5
                } else {
                    0.0
                };
                side * self.weight(i) * values[i]
            })
            .sum()
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}]/{} vs [{}, {}]/{}",
                self.x_lo, self.x_hi, self.n, other.x_lo, other.x_hi, other.n
            )))
        }
    }

    /// Index of the node mirrored through the origin (symmetric grids only).
    pub fn mirror(&self, i: usize) -> usize {
        self.n - 1 - i
    }
}
