//! Plant and continuous iP controller co-simulated with RK4.

use super::trajectory::{IntegratorId, Trajectory, TrajectoryMeta};
use super::{step_count, steps_per_delay, Realization, SimError, OVERFLOW_THRESHOLD};
use crate::model::{HistorySpec, IpController, LinearSystem};

const SINGULAR_TOL: f64 = 1e-12;

/// Control samples of one completed step. `u` jumps at multiples of the
/// delay, which fall on step boundaries, so both ends are kept one-sided.
struct StepControl {
    /// Right limit at the step start, with derivatives.
    start: Vec<f64>,
    mid: f64,
    /// Left limit at the step end.
    end: f64,
}

struct Law<'a> {
    plant: &'a Realization,
    alpha: f64,
    k: f64,
    denom: f64,
}

impl Law<'_> {
    /// `u(t)` from the algebraic loop `u = u_tau - (K y + y') / alpha`.
    fn control(&self, x: &[f64], delayed: f64) -> f64 {
        let y = self.plant.output_derivative(x, 0, &[]);
        let free = self.plant.output_derivative(x, 1, &[]);
        (delayed - (self.k * y + free) / self.alpha) / self.denom
    }

    /// `u^(l)` for `l < delayed.len()`, from the differentiated law.
    fn control_derivs(&self, x: &[f64], delayed: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for l in 0..delayed.len() {
            let y_l = self.plant.output_derivative(x, l, out);
            let free = self.plant.output_derivative(x, l + 1, out);
            out.push((delayed[l] - (self.k * y_l + free) / self.alpha) / self.denom);
        }
    }
}

/// Simulates the plant under `u(t) = u(t - tau) - (K y(t) + y'(t)) / alpha`.
///
/// `step` must divide `tau` and be at most `tau / 4`. Delayed control
/// values are read back at the same stage offsets they were produced at.
pub fn simulate_loop(
    sys: &LinearSystem,
    ctrl: &IpController,
    hist: &HistorySpec,
    horizon: f64,
    step: f64,
) -> Result<Trajectory, SimError> {
    let tau = ctrl.tau();
    let n_delay = steps_per_delay(tau, step, 0.25)?;
    let steps = step_count(horizon, step)?;
    let plant = Realization::new(sys);
    let a = sys.order();
    let alpha = ctrl.alpha_gain();
    let denom = 1.0 + plant.markov[0] / alpha;
    if denom.abs() <= SINGULAR_TOL {
        return Err(SimError::AlgebraicLoopSingular);
    }
    let law = Law {
        plant: &plant,
        alpha,
        k: ctrl.k_gain(),
        denom,
    };
    let n_u = plant.control_orders().max(1);
    let width = a.max(2);

    let y0: Vec<f64> = (0..a)
        .map(|k| hist.output_at(0.0, k))
        .collect::<Result<_, _>>()?;
    let u0: Vec<f64> = (0..plant.control_orders())
        .map(|m| hist.control_at(0.0, m))
        .collect::<Result<_, _>>()?;
    let mut x = plant.state_from_outputs(&y0, &u0);

    let mut traj = Trajectory::new(TrajectoryMeta {
        integrator: IntegratorId::Loop,
        step,
        tau,
        overflow: false,
        truncated_at: None,
        history_sup: hist.output_sup(1000)?,
    });
    let mut records: Vec<StepControl> = Vec::with_capacity(steps);
    let mut u_now = Vec::with_capacity(n_u);
    let mut delayed_start = vec![0.0; n_u];
    let mut k = [vec![0.0; a], vec![0.0; a], vec![0.0; a], vec![0.0; a]];
    let mut stage = vec![0.0; a];
    let mut f_end = vec![0.0; a];

    for n in 0..=steps {
        let t = n as f64 * step;
        let past = n.checked_sub(n_delay);
        match past {
            Some(j) => delayed_start.copy_from_slice(&records[j].start),
            None => {
                for (l, v) in delayed_start.iter_mut().enumerate() {
                    *v = hist.control_at(t - tau, l)?;
                }
            }
        }
        law.control_derivs(&x, &delayed_start, &mut u_now);
        let y_out: Vec<f64> = (0..width)
            .map(|kk| plant.output_derivative(&x, kk, &u_now))
            .collect();
        let y = y_out[0];
        traj.push(t, y_out, u_now[0], delayed_start[0], alpha);
        if !y.is_finite() || y.abs() > OVERFLOW_THRESHOLD {
            traj.meta.overflow = true;
            traj.meta.truncated_at = Some(t);
            break;
        }
        if n == steps {
            break;
        }

        let (d_mid, d_end) = match past {
            Some(j) => (records[j].mid, records[j].end),
            None => (
                hist.control_at(t - tau + 0.5 * step, 0)?,
                hist.control_at(t - tau + step, 0)?,
            ),
        };
        let h = step;
        plant.deriv(&x, u_now[0], &mut k[0]);
        for i in 0..a {
            stage[i] = x[i] + 0.5 * h * k[0][i];
        }
        plant.deriv(&stage, law.control(&stage, d_mid), &mut k[1]);
        for i in 0..a {
            stage[i] = x[i] + 0.5 * h * k[1][i];
        }
        plant.deriv(&stage, law.control(&stage, d_mid), &mut k[2]);
        for i in 0..a {
            stage[i] = x[i] + h * k[2][i];
        }
        plant.deriv(&stage, law.control(&stage, d_end), &mut k[3]);
        let x_new: Vec<f64> = (0..a)
            .map(|i| x[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
            .collect();
        let u_end = law.control(&x_new, d_end);
        plant.deriv(&x_new, u_end, &mut f_end);
        // Cubic Hermite midpoint of the state.
        for i in 0..a {
            stage[i] = 0.5 * (x[i] + x_new[i]) + h * (k[0][i] - f_end[i]) / 8.0;
        }
        let u_mid = law.control(&stage, d_mid);
        records.push(StepControl {
            start: u_now.clone(),
            mid: u_mid,
            end: u_end,
        });
        x = x_new;
    }
    Ok(traj)
}
