//! Numerical kernel and the stability verdict engine.

mod linalg;
mod poly;
mod roots;
mod state_space;
mod verdict;

pub use linalg::{eigenvalues, log_norm, spectral_radius, symmetric_eigenvalues, two_norm, Matrix};
pub use poly::poly_roots;
pub use roots::{
    chain_estimates, count_roots, count_roots_with, newton_refine, refine_root, CountOptions,
    NewtonReport, Rect, RootChainEstimate,
};
pub use state_space::{state_space, StateSpace};
pub use verdict::{
    verdict, Certificate, PlantLabel, StabilityVerdict, VerdictReason, VerdictStatus, TOL_EQ,
};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("polynomial has degree zero")]
    DegreeZero,
    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,
    #[error("Newton iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("characteristic function vanishes on the contour near {at}")]
    RootOnBoundary { at: Complex64 },
    #[error("contour sampling budget of {budget} evaluations exhausted")]
    BudgetExceeded { budget: usize },
    #[error("closed-loop form is not of neutral type")]
    NotNeutral,
    #[error("invalid rectangle: {0}")]
    InvalidRect(String),
}

/// Maximum real part over the eigenvalues.
///
/// Companion matrices go through [`poly_roots`]; everything else through
/// the dense QR path ([`spectral_abscissa_dense`]).
pub fn spectral_abscissa(m: &Matrix) -> Result<f64, SpectralError> {
    if !m.is_square() {
        return Err(SpectralError::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    match m.companion_polynomial() {
        Some(poly) => Ok(max_re(&poly_roots(&poly)?)),
        None => spectral_abscissa_dense(m),
    }
}

pub fn spectral_abscissa_dense(m: &Matrix) -> Result<f64, SpectralError> {
    Ok(max_re(&eigenvalues(m)?))
}

fn max_re(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}
