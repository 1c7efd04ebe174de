//! Exponential envelope `|y(t)| <= sup|history| * kappa * e^{-sigma t}`
//! fitted to a trajectory.

use serde::Serialize;

use super::{SimError, Trajectory};

const MIN_SAMPLES: usize = 50;
const MIN_R2: f64 = 0.9;
/// Envelope points below this fraction of the peak are roundoff.
const FLOOR: f64 = 1e-13;
const WINDOWS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayClass {
    Decaying,
    Bounded,
    Diverging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub kappa: f64,
    /// Positive means decay.
    pub sigma: f64,
    /// R^2 of the log-envelope regression.
    pub quality: f64,
    pub classification: DecayClass,
    pub envelope_points: usize,
}

/// Fits the envelope after dropping the first `skip` fraction of the
/// time span.
///
/// The envelope is the set of local maxima of `|y|` when they cover the
/// run; otherwise (monotone or nearly monotone signals) the maxima of
/// `|y|` over equal time windows.
pub fn fit_decay(traj: &Trajectory, skip: f64) -> Result<DecayFit, SimError> {
    let skip = skip.clamp(0.0, 0.99);
    let (t0, t1) = match (traj.t.first(), traj.t.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => {
            return Err(SimError::TooShort {
                needed: MIN_SAMPLES,
                have: 0,
            })
        }
    };
    let start_t = t0 + skip * (t1 - t0);
    let first = traj.t.partition_point(|&t| t < start_t);
    let t = &traj.t[first..];
    let y: Vec<f64> = traj.y_derivs[first..].iter().map(|v| v[0].abs()).collect();
    if t.len() < MIN_SAMPLES {
        return Err(SimError::TooShort {
            needed: MIN_SAMPLES,
            have: t.len(),
        });
    }

    let mut env = local_maxima(t, &y);
    if !covers(&env, t[0], t[t.len() - 1]) {
        env = window_maxima(t, &y);
    }
    let peak = env.iter().fold(0.0f64, |m, p| m.max(p.1));
    env.retain(|p| p.1 > FLOOR * peak && p.1.is_finite());

    let (slope, intercept, r2) = if env.len() >= 2 {
        regression(&env)
    } else {
        (
            0.0,
            env.first().map_or(f64::NEG_INFINITY, |p| p.1.ln()),
            0.0,
        )
    };
    let sigma = -slope;
    let sup = traj.meta.history_sup;
    let kappa = if sup > 0.0 {
        intercept.exp() / sup
    } else {
        intercept.exp()
    };
    let classification = if traj.meta.overflow || (sigma < 0.0 && r2 >= MIN_R2) {
        DecayClass::Diverging
    } else if sigma > 0.0 && r2 >= MIN_R2 {
        DecayClass::Decaying
    } else {
        DecayClass::Bounded
    };
    Ok(DecayFit {
        kappa,
        sigma,
        quality: r2,
        classification,
        envelope_points: env.len(),
    })
}

fn local_maxima(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    (1..y.len() - 1)
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
        .map(|i| (t[i], y[i]))
        .collect()
}

/// At least five maxima with no gap wider than a quarter of the span.
fn covers(env: &[(f64, f64)], start: f64, end: f64) -> bool {
    if env.len() < 5 {
        return false;
    }
    let limit = 0.25 * (end - start);
    let mut prev = start;
    for &(t, _) in env {
        if t - prev > limit {
            return false;
        }
        prev = t;
    }
    end - prev <= limit
}

fn window_maxima(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let n = t.len();
    let w = WINDOWS.min(n);
    (0..w)
        .filter_map(|k| {
            let lo = k * n / w;
            let hi = ((k + 1) * n / w).max(lo + 1);
            (lo..hi)
                .max_by(|&i, &j| y[i].total_cmp(&y[j]))
                .map(|i| (t[i], y[i]))
        })
        .collect()
}

/// Least squares of `ln(value)` on time: `(slope, intercept, r2)`.
fn regression(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, v) in pts {
        let (dx, dy) = (x - mx, v.ln() - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|&(x, v)| (v.ln() - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 0.0 };
    (slope, intercept, r2)
}
