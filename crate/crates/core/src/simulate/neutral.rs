//! Method of steps for `Y' = D Y'(t - tau) + A Y + B Y(t - tau)`.

use super::trajectory::{IntegratorId, Trajectory, TrajectoryMeta};
use super::{step_count, steps_per_delay, SimError, OVERFLOW_THRESHOLD};
use crate::model::HistorySpec;
use crate::spectral::{state_space, Matrix};
use crate::synthesis::{ClosedLoopForm, FormKind};

/// Dense output of one step: endpoint values and one-sided derivatives.
struct StepRecord {
    y0: Vec<f64>,
    f0: Vec<f64>,
    y1: Vec<f64>,
    f1: Vec<f64>,
}

impl StepRecord {
    /// Value and derivative at `theta` in {0, 1/2, 1} of the step.
    fn at(&self, half: u8, h: f64, y: &mut [f64], dy: &mut [f64]) {
        match half {
            0 => {
                y.copy_from_slice(&self.y0);
                dy.copy_from_slice(&self.f0);
            }
            2 => {
                y.copy_from_slice(&self.y1);
                dy.copy_from_slice(&self.f1);
            }
            _ => {
                for i in 0..y.len() {
                    y[i] = 0.5 * (self.y0[i] + self.y1[i]) + h * (self.f0[i] - self.f1[i]) / 8.0;
                    dy[i] = 1.5 * (self.y1[i] - self.y0[i]) / h - 0.25 * (self.f0[i] + self.f1[i]);
                }
            }
        }
    }
}

struct Rhs {
    d: Matrix,
    a: Matrix,
    b: Matrix,
}

impl Rhs {
    fn eval(&self, y: &[f64], yd: &[f64], dyd: &[f64], out: &mut [f64], tmp: &mut [f64]) {
        self.a.mul_vec(y, out);
        self.b.mul_vec(yd, tmp);
        for i in 0..out.len() {
            out[i] += tmp[i];
        }
        self.d.mul_vec(dyd, tmp);
        for i in 0..out.len() {
            out[i] += tmp[i];
        }
    }
}

/// Integrates a neutral closed-loop form from the output history, RK4
/// within each step. The control channels of the result are NaN.
pub fn simulate_neutral(
    form: &ClosedLoopForm,
    hist: &HistorySpec,
    horizon: f64,
    step: f64,
) -> Result<Trajectory, SimError> {
    if form.kind != FormKind::Neutral {
        return Err(SimError::NotNeutral);
    }
    let tau = form.tau;
    let n_delay = steps_per_delay(tau, step, 1.0)?;
    let steps = step_count(horizon, step)?;
    let ss = state_space(form).map_err(|_| SimError::NotNeutral)?;
    let rhs = Rhs {
        d: ss.d_mat,
        a: ss.a_mat,
        b: ss.b_mat,
    };
    let a = form.order();

    let hist_state = |t: f64, y: &mut [f64], dy: &mut [f64]| -> Result<(), SimError> {
        for i in 0..a {
            y[i] = hist.output_at(t, i)?;
            dy[i] = hist.output_at(t, i + 1)?;
        }
        Ok(())
    };

    let mut traj = Trajectory::new(TrajectoryMeta {
        integrator: IntegratorId::Neutral,
        step,
        tau,
        overflow: false,
        truncated_at: None,
        history_sup: hist.output_sup(1000)?,
    });
    let mut y = vec![0.0; a];
    let mut scratch = vec![0.0; a];
    hist_state(0.0, &mut y, &mut scratch)?;

    let mut records: Vec<StepRecord> = Vec::with_capacity(steps);
    let mut yd = vec![0.0; a];
    let mut dyd = vec![0.0; a];
    let mut tmp = vec![0.0; a];
    let mut stage = vec![0.0; a];
    let mut k = [vec![0.0; a], vec![0.0; a], vec![0.0; a], vec![0.0; a]];
    let mut f1 = vec![0.0; a];
    let h = step;

    let delayed = |n: usize,
                   half: u8,
                   records: &[StepRecord],
                   yd: &mut [f64],
                   dyd: &mut [f64]|
     -> Result<(), SimError> {
        match n.checked_sub(n_delay) {
            Some(j) => {
                records[j].at(half, h, yd, dyd);
                Ok(())
            }
            None => hist_state(n as f64 * h - tau + 0.5 * h * half as f64, yd, dyd),
        }
    };

    for n in 0..=steps {
        let t = n as f64 * h;
        delayed(n, 0, &records, &mut yd, &mut dyd)?;
        rhs.eval(&y, &yd, &dyd, &mut k[0], &mut tmp);
        let mut out = y.clone();
        if a == 1 {
            out.push(k[0][0]);
        }
        let y_now = out[0];
        traj.push(t, out, f64::NAN, f64::NAN, f64::NAN);
        if !y_now.is_finite() || y_now.abs() > OVERFLOW_THRESHOLD {
            traj.meta.overflow = true;
            traj.meta.truncated_at = Some(t);
            break;
        }
        if n == steps {
            break;
        }

        delayed(n, 1, &records, &mut yd, &mut dyd)?;
        for i in 0..a {
            stage[i] = y[i] + 0.5 * h * k[0][i];
        }
        rhs.eval(&stage, &yd, &dyd, &mut k[1], &mut tmp);
        for i in 0..a {
            stage[i] = y[i] + 0.5 * h * k[1][i];
        }
        rhs.eval(&stage, &yd, &dyd, &mut k[2], &mut tmp);
        delayed(n, 2, &records, &mut yd, &mut dyd)?;
        for i in 0..a {
            stage[i] = y[i] + h * k[2][i];
        }
        rhs.eval(&stage, &yd, &dyd, &mut k[3], &mut tmp);
        let y_new: Vec<f64> = (0..a)
            .map(|i| y[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
            .collect();
        rhs.eval(&y_new, &yd, &dyd, &mut f1, &mut tmp);
        records.push(StepRecord {
            y0: std::mem::replace(&mut y, y_new.clone()),
            f0: k[0].clone(),
            y1: y_new,
            f1: f1.clone(),
        });
    }
    Ok(traj)
}
