//! Implicit grid scheme for advanced-type forms: backward differences on
//! both channels, solved for the newest undelayed sample.
//!
//! The continuous problem is ill-posed forward in time, so this does not
//! converge as the step shrinks; it reproduces the qualitative blow-up.

use super::trajectory::{IntegratorId, Trajectory, TrajectoryMeta};
use super::{step_count, steps_per_delay, SimError, OVERFLOW_THRESHOLD};
use crate::model::HistorySpec;
use crate::synthesis::{ClosedLoopForm, FormKind};

/// Binomial weights of the order-`k` backward difference, newest first.
fn stencil(k: usize) -> Vec<f64> {
    let mut w = vec![1.0];
    for m in 1..=k {
        let prev = w[m - 1];
        w.push(-prev * (k + 1 - m) as f64 / m as f64);
    }
    w
}

/// Grid values indexed from `-n_delay`.
struct Grid {
    offset: usize,
    values: Vec<f64>,
}

impl Grid {
    fn get(&self, idx: isize) -> f64 {
        self.values[(idx + self.offset as isize) as usize]
    }

    /// Order-`k` backward difference quotient at `idx`.
    fn backward(&self, idx: isize, k: usize, weights: &[f64], h: f64) -> f64 {
        let s: f64 = (0..=k)
            .map(|m| weights[m] * self.get(idx - m as isize))
            .sum();
        s / h.powi(k as i32)
    }
}

pub fn simulate_advanced(
    form: &ClosedLoopForm,
    hist: &HistorySpec,
    horizon: f64,
    step: f64,
) -> Result<Trajectory, SimError> {
    if form.kind != FormKind::Advanced {
        return Err(SimError::NotAdvanced);
    }
    let tau = form.tau;
    let a = form.order();
    let n_delay = steps_per_delay(tau, step, 1.0)?;
    if n_delay < a {
        return Err(SimError::InvalidStep {
            step,
            tau,
            reason: format!("need at least {a} steps per delay"),
        });
    }
    let steps = step_count(horizon, step)?;
    let h = step;
    let stencils: Vec<Vec<f64>> = (0..=a).map(stencil).collect();
    // Term i carries derivative order a - i.
    let lead = form
        .bar_alpha
        .iter()
        .position(|&v| v != 0.0)
        .ok_or(SimError::NotAdvanced)?;
    let newest: f64 = (lead..=a)
        .map(|i| form.bar_alpha[i] / h.powi((a - i) as i32))
        .sum();
    if newest == 0.0 || !newest.is_finite() {
        return Err(SimError::SingularUpdate);
    }

    let mut grid = Grid {
        offset: n_delay,
        values: Vec::with_capacity(n_delay + steps + 1),
    };
    for j in 0..=n_delay {
        let t = (j as f64 - n_delay as f64) * h;
        grid.values.push(hist.output_at(t, 0)?);
    }

    let mut traj = Trajectory::new(TrajectoryMeta {
        integrator: IntegratorId::Advanced,
        step,
        tau,
        overflow: false,
        truncated_at: None,
        history_sup: hist.output_sup(1000)?,
    });
    let width = a.max(2);
    let emit = |traj: &mut Trajectory, grid: &Grid, n: isize| -> bool {
        let out: Vec<f64> = (0..width)
            .map(|k| grid.backward(n, k, &stencils[k], h))
            .collect();
        let y = out[0];
        traj.push(n as f64 * h, out, f64::NAN, f64::NAN, f64::NAN);
        y.is_finite() && y.abs() <= OVERFLOW_THRESHOLD
    };
    let mut ok = emit(&mut traj, &grid, 0);

    let mut n: isize = 0;
    while ok && (n as usize) < steps {
        let next = n + 1;
        let j = next - n_delay as isize;
        let mut delayed = 0.0;
        for i in 0..=a {
            let order = a - i;
            let d = if j - order as isize >= -(n_delay as isize) {
                grid.backward(j, order, &stencils[order], h)
            } else {
                hist.output_at(j as f64 * h, order)?
            };
            delayed += form.alpha[i] * d;
        }
        let mut known = 0.0;
        for i in lead..=a {
            let order = a - i;
            let w = &stencils[order];
            let partial: f64 = (1..=order)
                .map(|m| w[m] * grid.get(next - m as isize))
                .sum();
            known += form.bar_alpha[i] * partial / h.powi(order as i32);
        }
        grid.values.push((delayed - known) / newest);
        n = next;
        ok = emit(&mut traj, &grid, n);
    }
    if !ok {
        traj.meta.overflow = true;
        traj.meta.truncated_at = traj.t.last().copied();
    }
    Ok(traj)
}
