//! Numerical kernels: fixed-step RK4, finite-difference stencils, dense and
//! banded LU solves, and the discrete-action gradient used as an independent
//! oracle for derived Euler–Lagrange equations.

mod action;
pub(crate) mod fd;
mod linalg;
mod ode;

use thiserror::Error;

pub use action::{ActionDiscretization, ActionError};
pub use fd::{central_weights, fd_partials, fornberg_weights, Partials};
pub use linalg::{condition_number, dense_solve, determinant, BandedMatrix, Matrix};
pub use ode::{rk4, ConservedLog, OdeProblem, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("singular matrix: pivot {pivot:e} below threshold {threshold:e} at column {column}")]
    Singular {
        column: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid time stepping: {0}")]
    InvalidStep(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// `v` with 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn convergence_slope(steps: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
