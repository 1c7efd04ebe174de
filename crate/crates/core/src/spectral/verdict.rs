//! Stability verdict for the iP closed loop with a certificate of every
//! quantity it was based on.

use num_complex::Complex64;
use serde::Serialize;

use super::{
    log_norm, poly_roots, spectral_abscissa, spectral_radius, state_space, two_norm, SpectralError,
};
use crate::model::{IpController, LinearSystem};
use crate::synthesis::{closed_loop, ClosedLoopForm, FormKind};

/// Band around `r = 1` treated as equality.
pub const TOL_EQ: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictStatus {
    Unstable,
    NotExponentiallyStable,
    ExponentiallyStable,
    Inconclusive,
    UndelayedReduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PlantLabel {
    Stable,
    Unstable,
    /// Some eigenvalue lies on the imaginary axis.
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "tag")]
pub enum VerdictReason {
    /// Relative degree above one.
    OrderGap {
        a: usize,
        b: usize,
    },
    AdvancedType,
    NeutralRatioAboveOne,
    NeutralRatioEqualOne,
    /// `r < 1` and all sufficient conditions hold.
    ConditionsHold,
    /// `r < 1` but the listed conditions (numbered 2..=4) fail.
    ConditionsFailed {
        failed: Vec<u8>,
    },
    /// Every closed-loop coefficient cancels; only the plant's own
    /// dynamics remain, delayed by tau.
    UndelayedPlant {
        plant: PlantLabel,
    },
}

/// Everything the verdict computed. Fields not reached by the decision
/// path stay `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Certificate {
    /// `|alpha_1 / bar_alpha_1|`.
    pub r: Option<f64>,
    /// `ln(r) / tau`, the real part the neutral root chain approaches.
    pub chain_real_limit: Option<f64>,
    /// Spectral radius of `D`, from the dense eigen path.
    pub rho_d: Option<f64>,
    pub s_hat: Option<f64>,
    pub mu_hat: Option<f64>,
    pub norm_d: Option<f64>,
    pub norm_b: Option<f64>,
    pub tau_norm_b_plus_norm_d: Option<f64>,
    pub cond3_lhs: Option<f64>,
    pub cond3_rhs: Option<f64>,
    pub cond4_lhs: Option<f64>,
    /// `mu(A_hat) + tau |A_hat^T B| + |A_hat^T D|`, equal to
    /// `cond4_lhs / |bar_alpha_1|`.
    pub cond4_matrix_lhs: Option<f64>,
    /// Outcomes of conditions 1..=4 in order.
    pub conditions: Option<[bool; 4]>,
    pub plant_eigenvalues: Option<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub status: VerdictStatus,
    pub reason: VerdictReason,
    pub certificate: Certificate,
    pub form: ClosedLoopForm,
}

pub fn verdict(sys: &LinearSystem, ctrl: &IpController) -> Result<StabilityVerdict, SpectralError> {
    let form = closed_loop(sys, ctrl);
    let (a, b) = (sys.order(), sys.input_order());
    let tau = ctrl.tau();
    let alpha = sys.alpha();
    let mut cert = Certificate::default();

    if a > b + 1 {
        // Leading coefficients coincide, so the chain hugs the imaginary axis.
        neutral_quantities(&form, &mut cert)?;
        return Ok(StabilityVerdict {
            status: VerdictStatus::NotExponentiallyStable,
            reason: VerdictReason::OrderGap { a, b },
            certificate: cert,
            form,
        });
    }

    match form.kind {
        FormKind::Advanced => {
            return Ok(StabilityVerdict {
                status: VerdictStatus::Unstable,
                reason: VerdictReason::AdvancedType,
                certificate: cert,
                form,
            })
        }
        FormKind::Undelayed => {
            let eig = poly_roots(alpha)?;
            let plant = if eig.iter().any(|z| z.re == 0.0) {
                PlantLabel::Abstain
            } else if eig.iter().all(|z| z.re < 0.0) {
                PlantLabel::Stable
            } else {
                PlantLabel::Unstable
            };
            cert.plant_eigenvalues = Some(eig);
            return Ok(StabilityVerdict {
                status: VerdictStatus::UndelayedReduced,
                reason: VerdictReason::UndelayedPlant { plant },
                certificate: cert,
                form,
            });
        }
        FormKind::Neutral => {}
    }

    let r = (alpha[0] / (alpha[0] + sys.beta()[0] / ctrl.alpha_gain())).abs();
    neutral_quantities(&form, &mut cert)?;
    cert.r = Some(r);
    cert.chain_real_limit = Some(r.ln() / tau);

    let (status, reason) = if (r - 1.0).abs() <= TOL_EQ {
        (
            VerdictStatus::NotExponentiallyStable,
            VerdictReason::NeutralRatioEqualOne,
        )
    } else if r > 1.0 {
        (VerdictStatus::Unstable, VerdictReason::NeutralRatioAboveOne)
    } else {
        let conds = cert.conditions.expect("set for neutral forms");
        let failed: Vec<u8> = (2..=4u8).filter(|&i| !conds[i as usize - 1]).collect();
        if failed.is_empty() {
            (
                VerdictStatus::ExponentiallyStable,
                VerdictReason::ConditionsHold,
            )
        } else {
            (
                VerdictStatus::Inconclusive,
                VerdictReason::ConditionsFailed { failed },
            )
        }
    };
    Ok(StabilityVerdict {
        status,
        reason,
        certificate: cert,
        form,
    })
}

fn neutral_quantities(form: &ClosedLoopForm, cert: &mut Certificate) -> Result<(), SpectralError> {
    let ss = state_space(form)?;
    let tau = form.tau;
    let lead_abs = form.bar_alpha[0].abs();
    let alpha_lead_abs = form.alpha[0].abs();
    let alpha_tail = norm2(&form.alpha[1..]);
    let r = alpha_lead_abs / lead_abs;

    let s_hat = spectral_abscissa(&ss.a_hat)?;
    let mu_hat = log_norm(&ss.a_hat)?;
    let norm_d = two_norm(&ss.d_mat);
    let norm_b = two_norm(&ss.b_mat);
    let cond3_lhs = tau * alpha_tail + alpha_lead_abs;
    let cond4_lhs = norm2(&ss.a_coeffs) * (alpha_lead_abs + tau * alpha_tail) + lead_abs * mu_hat;
    let a_hat_t = ss.a_hat.transpose();
    let cond4_matrix_lhs =
        mu_hat + tau * two_norm(&a_hat_t.mul(&ss.b_mat)) + two_norm(&a_hat_t.mul(&ss.d_mat));

    cert.r = Some(r);
    cert.chain_real_limit = Some(r.ln() / tau);
    cert.rho_d = Some(spectral_radius(&ss.d_mat)?);
    cert.s_hat = Some(s_hat);
    cert.mu_hat = Some(mu_hat);
    cert.norm_d = Some(norm_d);
    cert.norm_b = Some(norm_b);
    cert.tau_norm_b_plus_norm_d = Some(tau * norm_b + norm_d);
    cert.cond3_lhs = Some(cond3_lhs);
    cert.cond3_rhs = Some(lead_abs);
    cert.cond4_lhs = Some(cond4_lhs);
    cert.cond4_matrix_lhs = Some(cond4_matrix_lhs);
    cert.conditions = Some([
        r < 1.0 && (r - 1.0).abs() > TOL_EQ,
        s_hat < 0.0,
        cond3_lhs < lead_abs,
        cond4_lhs < 0.0,
    ]);
    Ok(())
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
