//! Time-domain simulation of the closed loop and decay-envelope fitting.

mod advanced;
mod consistent;
mod fit;
mod loop_sim;
mod neutral;
mod sampled;
mod trajectory;

pub use advanced::simulate_advanced;
pub use consistent::consistent_history;
pub use fit::{fit_decay, DecayClass, DecayFit};
pub use loop_sim::simulate_loop;
pub use neutral::simulate_neutral;
pub use sampled::{simulate_sampled, Reference};
pub use trajectory::{IntegratorId, Trajectory, TrajectoryMeta};

use thiserror::Error;

use crate::model::{LinearSystem, ModelError};

/// `|y|` beyond which a run is declared divergent and truncated.
pub const OVERFLOW_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid step {step} for delay {tau}: {reason}")]
    InvalidStep { step: f64, tau: f64, reason: String },
    #[error("invalid horizon {0}")]
    InvalidHorizon(f64),
    #[error("algebraic loop in u(t) is singular (alpha = -beta_1/alpha_1)")]
    AlgebraicLoopSingular,
    #[error("closed-loop form is not of neutral type")]
    NotNeutral,
    #[error("closed-loop form is not of advanced type")]
    NotAdvanced,
    #[error("implicit update coefficient vanishes")]
    SingularUpdate,
    #[error("need at least {needed} samples after skip, have {have}")]
    TooShort { needed: usize, have: usize },
    #[error("history is inconsistent: {0}")]
    InconsistentHistory(String),
}

/// Number of steps per delay; `tau / step` must be an integer.
fn steps_per_delay(tau: f64, step: f64, max_step_fraction: f64) -> Result<usize, SimError> {
    let bad = |reason: &str| SimError::InvalidStep {
        step,
        tau,
        reason: reason.into(),
    };
    if !(step > 0.0 && step.is_finite()) {
        return Err(bad("step must be positive"));
    }
    if step > tau * max_step_fraction * (1.0 + 1e-12) {
        return Err(bad("step too large"));
    }
    let ratio = tau / step;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio {
        return Err(bad("delay is not a whole number of steps"));
    }
    Ok(n as usize)
}

fn step_count(horizon: f64, step: f64) -> Result<usize, SimError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(SimError::InvalidHorizon(horizon));
    }
    let ratio = horizon / step;
    Ok(((ratio - 1e-9 * ratio).ceil() as usize).max(1))
}

/// Observable canonical realization of `alpha(d/dt) y = beta(d/dt) u`:
/// `x_i' = -d_i x_1 + x_{i+1} + n_i u`, `y = x_1`.
#[derive(Debug, Clone)]
pub(crate) struct Realization {
    order: usize,
    /// `d_1 .. d_a`.
    den: Vec<f64>,
    /// `n_1 .. n_a`.
    num: Vec<f64>,
    /// Rows `C A^k` for `k = 0..=a`.
    c_pows: Vec<Vec<f64>>,
    /// Markov parameters `C A^k B` for `k = 0..=a`.
    markov: Vec<f64>,
}

impl Realization {
    pub(crate) fn new(sys: &LinearSystem) -> Self {
        let a = sys.order();
        let lead = sys.alpha()[0];
        let den: Vec<f64> = sys.alpha()[1..].iter().map(|v| v / lead).collect();
        let mut num = vec![0.0; a];
        let beta = sys.beta();
        let pad = a - beta.len();
        for (j, &v) in beta.iter().enumerate() {
            num[pad + j] = v / lead;
        }
        let mut c_pows = Vec::with_capacity(a + 1);
        let mut row = vec![0.0; a];
        row[0] = 1.0;
        for _ in 0..=a {
            c_pows.push(row.clone());
            // row * A: column 0 collects -d_i, column i+1 gets row[i].
            let mut next = vec![0.0; a];
            for i in 0..a {
                next[0] -= row[i] * den[i];
                if i + 1 < a {
                    next[i + 1] += row[i];
                }
            }
            row = next;
        }
        let markov = c_pows.iter().map(|r| dot(r, &num)).collect();
        Realization {
            order: a,
            den,
            num,
            c_pows,
            markov,
        }
    }

    pub(crate) fn deriv(&self, x: &[f64], u: f64, out: &mut [f64]) {
        let a = self.order;
        for i in 0..a {
            let next = if i + 1 < a { x[i + 1] } else { 0.0 };
            out[i] = -self.den[i] * x[0] + next + self.num[i] * u;
        }
    }

    /// `y^(k)` given the control derivatives `u^(0..)` (missing ones
    /// contribute nothing).
    pub(crate) fn output_derivative(&self, x: &[f64], k: usize, u: &[f64]) -> f64 {
        let mut v = dot(&self.c_pows[k], x);
        for m in 0..k.min(u.len()) {
            let h = self.markov[k - 1 - m];
            if h != 0.0 {
                v += h * u[m];
            }
        }
        v
    }

    /// State matching output derivatives `y^(0..a)` at one instant.
    pub(crate) fn state_from_outputs(&self, y: &[f64], u: &[f64]) -> Vec<f64> {
        let a = self.order;
        let mut x = vec![0.0; a];
        for k in 0..a {
            let mut rhs = y[k];
            for m in 0..k.min(u.len()) {
                rhs -= self.markov[k - 1 - m] * u[m];
            }
            // C A^k has a unit entry at k and zeros beyond.
            for j in 0..k {
                rhs -= self.c_pows[k][j] * x[j];
            }
            x[k] = rhs;
        }
        x
    }

    /// Highest control derivative order that can influence `y^(0..a-1)`.
    pub(crate) fn control_orders(&self) -> usize {
        (0..self.order)
            .filter(|&m| (m + 1..self.order).any(|k| self.markov[k - 1 - m] != 0.0))
            .max()
            .map_or(0, |m| m + 1)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
