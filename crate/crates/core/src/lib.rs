//! Stability analysis and simulation of intelligent proportional (iP)
//! model-free control loops on linear SISO plants.
//!
//! The iP law `u(t) = u(t - tau) - (K y(t) + y'(t)) / alpha` turns a plant
//! `alpha(d/dt) y = beta(d/dt) u` into the delay equation
//! `bar_alpha(d/dt) y = alpha(d/dt) y(t - tau)`. This crate builds that
//! equation, classifies it, certifies exponential stability where the
//! sufficient conditions allow, and simulates the loop.

// Index loops mirror the matrix formulas; `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod model;
pub mod simulate;
pub mod spectral;
pub mod synthesis;
pub mod tuner;

pub use model::{new_system, HistoryKind, HistorySpec, IpController, LinearSystem, ModelError};
pub use spectral::{verdict, StabilityVerdict, VerdictReason, VerdictStatus};
pub use synthesis::{
    closed_loop, pd_gains, quasi_polynomial, ClosedLoopForm, FormKind, QuasiPolynomial,
};
pub use tuner::{tune, Objective, TuneError, TuneRequest, TuneResult};
