//! Discrete iP controller sampled every `tau`, zero-order hold into the
//! continuous plant.

use serde::{Deserialize, Serialize};

use super::trajectory::{IntegratorId, Trajectory, TrajectoryMeta};
use super::{step_count, Realization, SimError, OVERFLOW_THRESHOLD};
use crate::model::{IpController, LinearSystem, SampledSignal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    #[default]
    Zero,
    /// `level` for `t >= 0`.
    Step { level: f64 },
    /// Held at the end values outside the sampled range.
    Sampled { signal: SampledSignal },
}

impl Reference {
    fn derivative(&self, t: f64, order: usize) -> f64 {
        match self {
            Reference::Zero => 0.0,
            Reference::Step { level } => {
                if order == 0 {
                    *level
                } else {
                    0.0
                }
            }
            Reference::Sampled { signal } => signal.eval(t, order).unwrap_or(f64::NAN),
        }
    }
}

/// Runs `u_k = u_{k-1} + (-(K tau + 1) y_k + y_{k-1}) / (alpha tau)` on the
/// tracking error `y = output - reference`, with `u = 0` on `[-tau, 0]`
/// and the plant starting at rest.
///
/// The trajectory records the tracking error at every RK4 substep;
/// `u_delayed` is the previous sample's control.
pub fn simulate_sampled(
    sys: &LinearSystem,
    ctrl: &IpController,
    reference: &Reference,
    horizon: f64,
    substeps: usize,
) -> Result<Trajectory, SimError> {
    let tau = ctrl.tau();
    if substeps < 20 {
        return Err(SimError::InvalidStep {
            step: tau / substeps.max(1) as f64,
            tau,
            reason: "need at least 20 substeps per sampling period".into(),
        });
    }
    let samples = step_count(horizon, tau)?;
    let plant = Realization::new(sys);
    let a = sys.order();
    let width = a.max(2);
    let (alpha, k_gain) = (ctrl.alpha_gain(), ctrl.k_gain());
    let h = tau / substeps as f64;

    let mut traj = Trajectory::new(TrajectoryMeta {
        integrator: IntegratorId::Sampled,
        step: h,
        tau,
        overflow: false,
        truncated_at: None,
        history_sup: 0.0,
    });
    let mut x = vec![0.0; a];
    let mut k = [vec![0.0; a], vec![0.0; a], vec![0.0; a], vec![0.0; a]];
    let mut stage = vec![0.0; a];
    let error_at = |x: &[f64], t: f64, order: usize, u: f64| {
        plant.output_derivative(x, order, &[u]) - reference.derivative(t, order)
    };

    let (mut u_prev, mut y_prev) = (0.0, 0.0);
    'outer: for s in 0..=samples {
        let t_k = s as f64 * tau;
        let y_k = error_at(&x, t_k, 0, 0.0);
        let u_k = if s == 0 {
            traj.meta.history_sup = y_k.abs();
            0.0
        } else {
            u_prev + (-(k_gain * tau + 1.0) * y_k + y_prev) / (alpha * tau)
        };
        let last = s == samples;
        for j in 0..substeps {
            let t = t_k + j as f64 * h;
            let out: Vec<f64> = (0..width).map(|o| error_at(&x, t, o, u_k)).collect();
            let y = out[0];
            traj.push(t, out, u_k, u_prev, alpha);
            if !y.is_finite() || y.abs() > OVERFLOW_THRESHOLD {
                traj.meta.overflow = true;
                traj.meta.truncated_at = Some(t);
                break 'outer;
            }
            if last {
                break 'outer;
            }
            plant.deriv(&x, u_k, &mut k[0]);
            for i in 0..a {
                stage[i] = x[i] + 0.5 * h * k[0][i];
            }
            plant.deriv(&stage, u_k, &mut k[1]);
            for i in 0..a {
                stage[i] = x[i] + 0.5 * h * k[1][i];
            }
            plant.deriv(&stage, u_k, &mut k[2]);
            for i in 0..a {
                stage[i] = x[i] + h * k[2][i];
            }
            plant.deriv(&stage, u_k, &mut k[3]);
            for i in 0..a {
                x[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
        }
        u_prev = u_k;
        y_prev = y_k;
    }
    Ok(traj)
}
