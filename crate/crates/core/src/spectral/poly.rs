//! Polynomial roots by simultaneous Aberth–Ehrlich iteration.

use num_complex::Complex64;

use super::SpectralError;
use crate::synthesis::horner;

const MAX_ABERTH_ITERS: usize = 500;

/// All complex roots of a real polynomial given leading-first.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>, SpectralError> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    let first = coeffs.iter().position(|&c| c != 0.0);
    let coeffs = match first {
        Some(i) => &coeffs[i..],
        None => return Err(SpectralError::DegreeZero),
    };
    if coeffs.len() < 2 {
        return Err(SpectralError::DegreeZero);
    }
    let trailing = coeffs.iter().rev().take_while(|&&c| c == 0.0).count();
    let core = &coeffs[..coeffs.len() - trailing];
    let mut roots = vec![Complex64::new(0.0, 0.0); trailing];
    if core.len() >= 2 {
        let lead = core[0];
        let monic: Vec<f64> = core.iter().map(|c| c / lead).collect();
        let found = match aberth(&monic) {
            Some(r) => r,
            None => newton_deflation(&monic)?,
        };
        roots.extend(found.into_iter().map(|z| polish(&monic, z)));
    }
    Ok(roots)
}

fn initial_guesses(monic: &[f64]) -> Vec<Complex64> {
    let n = monic.len() - 1;
    let center = -monic[1] / n as f64;
    // Root radius bound around the centroid, from the shifted polynomial.
    let shifted = taylor_shift(monic, center);
    let radius = (1..=n)
        .map(|k| shifted[k].abs().powf(1.0 / k as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    (0..n)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::new(center, 0.0) + Complex64::from_polar(radius, angle)
        })
        .collect()
}

/// Coefficients of `p(x + c)`, leading-first.
fn taylor_shift(p: &[f64], c: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    let n = q.len();
    for i in 0..n {
        for j in 1..n - i {
            q[j] += c * q[j - 1];
        }
    }
    q
}

fn aberth(monic: &[f64]) -> Option<Vec<Complex64>> {
    let n = monic.len() - 1;
    let mut z = initial_guesses(monic);
    let mut done = vec![false; n];
    for _ in 0..MAX_ABERTH_ITERS {
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (p, dp) = horner(monic, z[i]);
            if p.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let w = p / dp;
            let s: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let delta = w / (Complex64::new(1.0, 0.0) - w * s);
            if !delta.re.is_finite() || !delta.im.is_finite() {
                return None;
            }
            z[i] -= delta;
            if delta.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            }
        }
        if done.iter().all(|&d| d) {
            return Some(z);
        }
    }
    // Multiple roots converge only linearly; accept if residuals are small.
    let ok = z.iter().all(|&r| {
        let (p, _) = horner(monic, r);
        p.norm() <= 1e-10 * abs_scale(monic, r.norm())
    });
    ok.then_some(z)
}

fn abs_scale(c: &[f64], r: f64) -> f64 {
    c.iter().fold(0.0, |acc, &v| acc * r + v.abs())
}

fn newton_deflation(monic: &[f64]) -> Result<Vec<Complex64>, SpectralError> {
    let mut work: Vec<Complex64> = monic.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let mut roots = Vec::new();
    while work.len() > 1 {
        let mut z = Complex64::new(0.3, 0.7);
        let mut converged = false;
        for _ in 0..1000 {
            let (p, dp) = horner_c(&work, z);
            if p.norm() == 0.0 {
                converged = true;
                break;
            }
            let step = p / dp;
            if !step.re.is_finite() || !step.im.is_finite() {
                z += Complex64::new(0.1, 0.3);
                continue;
            }
            z -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SpectralError::NoConvergence { iterations: 1000 });
        }
        roots.push(z);
        // Synthetic division by (x - z).
        let mut next = Vec::with_capacity(work.len() - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in &work[..work.len() - 1] {
            acc = acc * z + c;
            next.push(acc);
        }
        work = next;
    }
    Ok(roots)
}

fn horner_c(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &coef in c {
        dp = dp * z + p;
        p = p * z + coef;
    }
    (p, dp)
}

/// A few Newton steps on the full polynomial; keeps the input if they do
/// not reduce the residual.
fn polish(monic: &[f64], mut z: Complex64) -> Complex64 {
    let (mut p, mut dp) = horner(monic, z);
    for _ in 0..3 {
        if p.norm() == 0.0 || dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, dpc) = horner(monic, cand);
        if pc.norm() < p.norm() {
            z = cand;
            p = pc;
            dp = dpc;
        } else {
            break;
        }
    }
    z
}
