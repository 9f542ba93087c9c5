use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resolvent is singular at z = {z} (|det(I - zW)| = {det:e})")]
    Pole { z: Complex64, det: f64 },

    #[error(
        "quadrature did not converge: {nodes} nodes, last entrywise change {last_change:e} \
         (tolerance {tolerance:e})"
    )]
    Quadrature {
        nodes: usize,
        last_change: f64,
        tolerance: f64,
    },

    #[error("optimizer did not reach stationarity: gradient norm {gradient_norm:e} after {iterations} iterations")]
    Stationarity {
        gradient_norm: f64,
        iterations: usize,
    },

    /// Bisection for the spectral width found no sign change. `sweep` holds
    /// `(s, residual)` samples across the bracket.
    #[error("calibration failed: {reason}")]
    Calibration {
        reason: String,
        sweep: Vec<(f64, f64)>,
    },

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors that come from numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Pole { .. }
                | Error::Quadrature { .. }
                | Error::Stationarity { .. }
                | Error::Calibration { .. }
        )
    }
}
