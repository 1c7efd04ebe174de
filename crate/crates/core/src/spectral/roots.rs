//! Roots of the characteristic quasi-polynomial: chain asymptotics, Newton
//! polishing and argument-principle counting.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::synthesis::QuasiPolynomial;

const NEWTON_MAX_ITERS: usize = 100;
const NEWTON_TOL: f64 = 1e-10;
const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonReport {
    pub root: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton iteration on `F`. Steps are halved while `|F|` fails to
/// decrease; convergence requires `|F| <= 1e-10 * scale(z)`.
pub fn newton_refine(qp: &QuasiPolynomial, seed: Complex64) -> Result<NewtonReport, SpectralError> {
    if !(seed.re.is_finite() && seed.im.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    let fail = |iterations| Err(SpectralError::NoConvergence { iterations });
    let mut z = seed;
    let (mut f, mut df) = qp.eval_with_derivative(z);
    for it in 0..NEWTON_MAX_ITERS {
        let fnorm = f.norm();
        if !fnorm.is_finite() {
            return fail(it);
        }
        let converged = fnorm <= NEWTON_TOL * qp.scale(z);
        if fnorm == 0.0 {
            return Ok(NewtonReport {
                root: z,
                residual: 0.0,
                iterations: it,
            });
        }
        let step = f / df;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return if converged {
                Ok(NewtonReport {
                    root: z,
                    residual: fnorm,
                    iterations: it,
                })
            } else {
                fail(it)
            };
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = z - step * lambda;
            let (fc, dfc) = qp.eval_with_derivative(cand);
            if fc.norm() < fnorm {
                accepted = Some((cand, fc, dfc));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((cand, fc, dfc)) => {
                let moved = (cand - z).norm();
                z = cand;
                f = fc;
                df = dfc;
                let tiny = moved <= 1e-15 * z.norm().max(1.0);
                if tiny && f.norm() <= NEWTON_TOL * qp.scale(z) {
                    return Ok(NewtonReport {
                        root: z,
                        residual: f.norm(),
                        iterations: it + 1,
                    });
                }
            }
            None => {
                // No descent left: either at roundoff level or stuck.
                return if converged {
                    Ok(NewtonReport {
                        root: z,
                        residual: fnorm,
                        iterations: it,
                    })
                } else {
                    fail(it)
                };
            }
        }
    }
    if f.norm() <= NEWTON_TOL * qp.scale(z) {
        Ok(NewtonReport {
            root: z,
            residual: f.norm(),
            iterations: NEWTON_MAX_ITERS,
        })
    } else {
        fail(NEWTON_MAX_ITERS)
    }
}

/// Polished root near `seed`.
pub fn refine_root(qp: &QuasiPolynomial, seed: Complex64) -> Result<Complex64, SpectralError> {
    newton_refine(qp, seed).map(|r| r.root)
}

/// Member `k` of a neutral root chain with its optional polished root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootChainEstimate {
    pub k: i64,
    /// `|Q_lead / P_lead|`.
    pub ratio_mag: f64,
    /// Principal argument of `Q_lead / P_lead` (0 or pi for real data).
    pub ratio_arg: f64,
    pub estimate: Complex64,
    pub refined: Option<Complex64>,
    pub residual: Option<f64>,
}

impl RootChainEstimate {
    /// Distance between polished root and asymptotic estimate.
    pub fn gap(&self) -> Option<f64> {
        self.refined.map(|r| (r - self.estimate).norm())
    }
}

/// Asymptotic chain `z_k = (ln|r| + i(arg r + 2k pi)) / tau` with
/// `r = Q_lead / P_lead`, optionally polished by Newton.
pub fn chain_estimates(
    qp: &QuasiPolynomial,
    k_range: RangeInclusive<i64>,
    refine: bool,
) -> Result<Vec<RootChainEstimate>, SpectralError> {
    if qp.p.len() != qp.q.len() || qp.p.first().is_none_or(|&v| v == 0.0) || qp.q[0] == 0.0 {
        return Err(SpectralError::NotNeutral);
    }
    let ratio = qp.q[0] / qp.p[0];
    let ratio_mag = ratio.abs();
    let ratio_arg = if ratio < 0.0 { PI } else { 0.0 };
    let out = k_range
        .map(|k| {
            let estimate = Complex64::new(ratio_mag.ln(), ratio_arg + TAU * k as f64) / qp.tau;
            let (refined, residual) = if refine {
                match newton_refine(qp, estimate) {
                    Ok(r) => (Some(r.root), Some(qp.eval(r.root).norm())),
                    Err(_) => (None, None),
                }
            } else {
                (None, None)
            };
            RootChainEstimate {
                k,
                ratio_mag,
                ratio_arg,
                estimate,
                refined,
                residual,
            }
        })
        .collect();
    Ok(out)
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CountOptions {
    /// Minimum number of initial samples per edge.
    pub min_samples_per_edge: usize,
    /// Total evaluation cap.
    pub budget: usize,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            min_samples_per_edge: 256,
            budget: 4_000_000,
        }
    }
}

/// Number of zeros of `F` inside `rect` (argument principle).
pub fn count_roots(qp: &QuasiPolynomial, rect: Rect) -> Result<i64, SpectralError> {
    count_roots_with(qp, rect, CountOptions::default())
}

pub fn count_roots_with(
    qp: &QuasiPolynomial,
    rect: Rect,
    opts: CountOptions,
) -> Result<i64, SpectralError> {
    if !(rect.re_min < rect.re_max && rect.im_min < rect.im_max)
        || ![rect.re_min, rect.re_max, rect.im_min, rect.im_max]
            .iter()
            .all(|v| v.is_finite())
    {
        return Err(SpectralError::InvalidRect(format!("{rect:?}")));
    }
    let corners = [
        Complex64::new(rect.re_min, rect.im_min),
        Complex64::new(rect.re_max, rect.im_min),
        Complex64::new(rect.re_max, rect.im_max),
        Complex64::new(rect.re_min, rect.im_max),
    ];
    let mut walker = ContourWalker {
        qp,
        evaluations: 0,
        budget: opts.budget,
        min_len: 1e-13 * (rect.re_max - rect.re_min).max(rect.im_max - rect.im_min),
    };
    let mut total = 0.0;
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        // The exponential factor turns by tau per unit of imaginary travel;
        // sample densely enough that one step stays well under a quarter turn.
        let len = (b - a).norm();
        let n = opts
            .min_samples_per_edge
            .max((8.0 * qp.tau * len / PI).ceil() as usize);
        let mut prev = walker.point(a)?;
        for i in 1..=n {
            let z = a + (b - a) * (i as f64 / n as f64);
            let next = walker.point(z)?;
            total += walker.segment(prev, next, 0)?;
            prev = next;
        }
    }
    let winding = total / TAU;
    Ok(winding.round() as i64)
}

struct ContourWalker<'a> {
    qp: &'a QuasiPolynomial,
    evaluations: usize,
    budget: usize,
    min_len: f64,
}

#[derive(Clone, Copy)]
struct ContourPoint {
    z: Complex64,
    arg: f64,
}

impl ContourWalker<'_> {
    fn point(&mut self, z: Complex64) -> Result<ContourPoint, SpectralError> {
        self.evaluations += 1;
        if self.evaluations > self.budget {
            return Err(SpectralError::BudgetExceeded {
                budget: self.budget,
            });
        }
        let v = self.qp.eval_scaled(z);
        let ln_abs = v.ln_abs();
        if !(ln_abs > BOUNDARY_TOL.ln() + self.qp.ln_scale(z)) {
            return Err(SpectralError::RootOnBoundary { at: z });
        }
        Ok(ContourPoint { z, arg: v.arg() })
    }

    /// Unwrapped phase change from `a` to `b`, bisecting until each step
    /// turns by less than a quarter.
    fn segment(
        &mut self,
        a: ContourPoint,
        b: ContourPoint,
        depth: usize,
    ) -> Result<f64, SpectralError> {
        let d = wrap(b.arg - a.arg);
        if d.abs() < FRAC_PI_2 {
            return Ok(d);
        }
        if depth > 60 || (b.z - a.z).norm() < self.min_len {
            return Err(SpectralError::RootOnBoundary { at: a.z });
        }
        let mid = self.point((a.z + b.z) * 0.5)?;
        Ok(self.segment(a, mid, depth + 1)? + self.segment(mid, b, depth + 1)?)
    }
}

fn wrap(d: f64) -> f64 {
    let mut d = d % TAU;
    if d > PI {
        d -= TAU;
    } else if d < -PI {
        d += TAU;
    }
    d
}
