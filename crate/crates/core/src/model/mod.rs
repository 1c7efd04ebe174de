//! Plant, controller and initial-history types.
//!
//! Coefficients are stored leading-first exactly as supplied: `alpha[0]`
//! multiplies `y^(a)` and `beta[0]` multiplies `u^(b)`. Nothing is
//! normalized here; analysis code divides by the leading coefficient where
//! it needs to.

mod history;

pub use history::{eval_history, ExpTerm, HistoryKind, HistorySpec, SampledSignal};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("coefficient list is empty")]
    EmptyCoefficients,
    #[error("plant is not strictly causal: output order a={a} must exceed input order b={b}")]
    NotStrictlyCausal { a: usize, b: usize },
    #[error("leading coefficient of {which} is zero")]
    ZeroLeadingCoefficient { which: &'static str },
    #[error("non-finite coefficient in {which}")]
    NonFinite { which: &'static str },
    #[error("controller gain alpha must be nonzero")]
    ZeroAlphaGain,
    #[error("delay tau must be strictly positive and finite, got {0}")]
    InvalidDelay(f64),
    #[error("controller gain K must be finite")]
    InvalidGain,
    #[error("time {t} lies outside the history domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("derivative of order {order} unavailable for sampled history")]
    DerivativeUnavailable { order: usize },
    #[error("invalid sampled history: {0}")]
    InvalidSamples(String),
}

/// Linear SISO plant
/// `alpha[0] y^(a) + ... + alpha[a] y = beta[0] u^(b) + ... + beta[b] u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct LinearSystem {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSystem {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl TryFrom<RawSystem> for LinearSystem {
    type Error = ModelError;
    fn try_from(raw: RawSystem) -> Result<Self, Self::Error> {
        new_system(raw.alpha, raw.beta)
    }
}

impl From<LinearSystem> for RawSystem {
    fn from(s: LinearSystem) -> Self {
        RawSystem {
            alpha: s.alpha,
            beta: s.beta,
        }
    }
}

/// Validates raw coefficient lists into a [`LinearSystem`].
pub fn new_system(alpha: Vec<f64>, beta: Vec<f64>) -> Result<LinearSystem, ModelError> {
    if alpha.is_empty() || beta.is_empty() {
        return Err(ModelError::EmptyCoefficients);
    }
    if alpha.iter().any(|c| !c.is_finite()) {
        return Err(ModelError::NonFinite { which: "alpha" });
    }
    if beta.iter().any(|c| !c.is_finite()) {
        return Err(ModelError::NonFinite { which: "beta" });
    }
    let a = alpha.len() - 1;
    let b = beta.len() - 1;
    if a <= b {
        return Err(ModelError::NotStrictlyCausal { a, b });
    }
    if alpha[0] == 0.0 {
        return Err(ModelError::ZeroLeadingCoefficient { which: "alpha" });
    }
    if beta[0] == 0.0 {
        return Err(ModelError::ZeroLeadingCoefficient { which: "beta" });
    }
    Ok(LinearSystem { alpha, beta })
}

impl LinearSystem {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self, ModelError> {
        new_system(alpha, beta)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Output order `a`.
    pub fn order(&self) -> usize {
        self.alpha.len() - 1
    }

    /// Input order `b`.
    pub fn input_order(&self) -> usize {
        self.beta.len() - 1
    }

    /// `a - b`.
    pub fn relative_degree(&self) -> usize {
        self.order() - self.input_order()
    }

    /// Multiplies every plant coefficient by `c`. The input-output relation
    /// is unchanged.
    pub fn scaled(&self, c: f64) -> Result<Self, ModelError> {
        new_system(
            self.alpha.iter().map(|v| v * c).collect(),
            self.beta.iter().map(|v| v * c).collect(),
        )
    }
}

/// Intelligent proportional controller `u = u(t - tau) - (K y + y') / alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawController", into = "RawController")]
pub struct IpController {
    alpha_gain: f64,
    k_gain: f64,
    tau: f64,
}

#[derive(Serialize, Deserialize)]
struct RawController {
    alpha: f64,
    k: f64,
    tau: f64,
}

impl TryFrom<RawController> for IpController {
    type Error = ModelError;
    fn try_from(raw: RawController) -> Result<Self, Self::Error> {
        IpController::new(raw.alpha, raw.k, raw.tau)
    }
}

impl From<IpController> for RawController {
    fn from(c: IpController) -> Self {
        RawController {
            alpha: c.alpha_gain,
            k: c.k_gain,
            tau: c.tau,
        }
    }
}

impl IpController {
    pub fn new(alpha_gain: f64, k_gain: f64, tau: f64) -> Result<Self, ModelError> {
        if alpha_gain == 0.0 || !alpha_gain.is_finite() {
            return Err(ModelError::ZeroAlphaGain);
        }
        if !k_gain.is_finite() {
            return Err(ModelError::InvalidGain);
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ModelError::InvalidDelay(tau));
        }
        Ok(IpController {
            alpha_gain,
            k_gain,
            tau,
        })
    }

    pub fn alpha_gain(&self) -> f64 {
        self.alpha_gain
    }

    pub fn k_gain(&self) -> f64 {
        self.k_gain
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Gains `K_d1 .. K_d(b+2)` of the equivalent PD law, leading-first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdGains {
    pub gains: Vec<f64>,
}

impl PdGains {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}
