//! Grid search for certified `(alpha, K)` pairs at a fixed delay.
//!
//! The gain is parameterised as `alpha = theta * sign(beta_1)`; small
//! `theta` is what makes the sufficient conditions attainable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{IpController, LinearSystem, ModelError};
use crate::spectral::{verdict, Certificate, SpectralError, VerdictReason, VerdictStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Rank by the condition-4 margin. A heuristic, not a decay rate.
    #[default]
    MaxSigmaProxy,
    FirstFeasible,
}

#[derive(Debug, Error, PartialEq)]
pub enum TuneError {
    #[error(
        "relative degree a - b = {} exceeds one (a={a}, b={b}): no gains make the closed loop \
         exponentially stable",
        a - b
    )]
    OrderGap { a: usize, b: usize },
    #[error("{0} grid is empty")]
    EmptyGrid(&'static str),
    #[error("theta must be positive and finite, got {0}")]
    InvalidTheta(f64),
    #[error("K must be finite, got {0}")]
    InvalidK(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone)]
pub struct TuneRequest {
    sys: LinearSystem,
    tau: f64,
    theta_grid: Vec<f64>,
    k_grid: Vec<f64>,
    objective: Objective,
}

impl TuneRequest {
    pub fn new(
        sys: LinearSystem,
        tau: f64,
        theta_grid: Vec<f64>,
        k_grid: Vec<f64>,
        objective: Objective,
    ) -> Result<Self, TuneError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ModelError::InvalidDelay(tau).into());
        }
        if theta_grid.is_empty() {
            return Err(TuneError::EmptyGrid("theta"));
        }
        if k_grid.is_empty() {
            return Err(TuneError::EmptyGrid("K"));
        }
        if let Some(&t) = theta_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(TuneError::InvalidTheta(t));
        }
        if let Some(&k) = k_grid.iter().find(|k| !k.is_finite()) {
            return Err(TuneError::InvalidK(k));
        }
        Ok(TuneRequest {
            sys,
            tau,
            theta_grid,
            k_grid,
            objective,
        })
    }

    pub fn sys(&self) -> &LinearSystem {
        &self.sys
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasiblePoint {
    pub theta: f64,
    pub alpha: f64,
    pub k: f64,
    /// Negated condition-4 left side; larger ranks higher.
    pub sigma_proxy: f64,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfeasiblePoint {
    pub theta: f64,
    pub alpha: f64,
    pub k: f64,
    pub status: VerdictStatus,
    pub reason: VerdictReason,
    /// Failed condition numbers, empty when the verdict stopped earlier.
    pub failed: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub objective: Objective,
    pub feasible: Vec<FeasiblePoint>,
    pub best: Option<FeasiblePoint>,
    pub infeasible: Vec<InfeasiblePoint>,
}

/// Runs the verdict over the `theta x K` grid, theta outermost, in the
/// order given.
pub fn tune(req: &TuneRequest) -> Result<TuneResult, TuneError> {
    let (a, b) = (req.sys.order(), req.sys.input_order());
    if a > b + 1 {
        return Err(TuneError::OrderGap { a, b });
    }
    let sign = req.sys.beta()[0].signum();
    let mut feasible = Vec::new();
    let mut infeasible = Vec::new();
    for &theta in &req.theta_grid {
        let alpha = theta * sign;
        for &k in &req.k_grid {
            let ctrl = IpController::new(alpha, k, req.tau)?;
            let v = verdict(&req.sys, &ctrl)?;
            if v.status == VerdictStatus::ExponentiallyStable {
                let cond4 = v.certificate.cond4_lhs.unwrap_or(f64::INFINITY);
                feasible.push(FeasiblePoint {
                    theta,
                    alpha,
                    k,
                    sigma_proxy: -cond4,
                    certificate: v.certificate,
                });
            } else {
                let failed = match &v.reason {
                    VerdictReason::ConditionsFailed { failed } => failed.clone(),
                    _ => Vec::new(),
                };
                infeasible.push(InfeasiblePoint {
                    theta,
                    alpha,
                    k,
                    status: v.status,
                    reason: v.reason,
                    failed,
                });
            }
        }
    }
    let best = match req.objective {
        Objective::FirstFeasible => feasible.first().cloned(),
        // First maximum wins ties, keeping the choice grid-order stable.
        Objective::MaxSigmaProxy => feasible
            .iter()
            .fold(None::<&FeasiblePoint>, |best, p| match best {
                Some(q) if q.sigma_proxy >= p.sigma_proxy => Some(q),
                _ => Some(p),
            })
            .cloned(),
    };
    Ok(TuneResult {
        objective: req.objective,
        feasible,
        best,
        infeasible,
    })
}
