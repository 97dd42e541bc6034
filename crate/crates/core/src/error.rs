use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates its documented domain.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The simulation box is too small for the wells it must contain.
    #[error("box [{x_lo}, {x_hi}] too small: wells at ±{x_min} need at least {margin} x_zpt of margin")]
    BoxTooSmall {
        x_lo: f64,
        x_hi: f64,
        x_min: f64,
        margin: f64,
    },

    #[error("requested {requested} states but the grid supports at most {capacity}")]
    TooManyStates { requested: usize, capacity: usize },

    #[error("eigensolver did not converge for state {index}: residual {residual:e}")]
    NoConvergence { index: usize, residual: f64 },

    #[error("state is not localized in a single well (best one-sided mass {best:.4})")]
    NotLocalized { best: f64 },

    #[error("post-measurement norm underflowed (outcome {x_res}, sigma {sigma})")]
    NormUnderflow { x_res: f64, sigma: f64 },

    #[error("localizing preparation failed after {attempts} attempts")]
    PreparationFailed { attempts: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: format!("must be a finite positive number, got {value}"),
        })
    }
}

pub(crate) fn check_finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: format!("must be finite, got {value}"),
        })
    }
}
