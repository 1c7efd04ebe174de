//! Closed-loop synthesis: the iP loop rewritten as a PD-controlled neutral
//! delay equation `bar_alpha(d/dt) y = alpha(d/dt) y(t - tau)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::model::{IpController, LinearSystem, PdGains};

/// Relative tolerance below which a closed-loop coefficient counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormKind {
    Neutral,
    Advanced,
    Undelayed,
}

/// `bar_alpha[0] y^(a) + ... = alpha[0] y^(a)(t - tau) + ...`.
///
/// For [`FormKind::Undelayed`] all of `bar_alpha` is zero and the equation
/// reads `0 = alpha(d/dt) y(t - tau)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedLoopForm {
    pub kind: FormKind,
    pub bar_alpha: Vec<f64>,
    pub alpha: Vec<f64>,
    pub tau: f64,
}

impl ClosedLoopForm {
    /// Builds a form from raw coefficient lists and classifies it with a
    /// plain `== 0.0` test. Used for hand-built equations.
    pub fn from_parts(bar_alpha: Vec<f64>, alpha: Vec<f64>, tau: f64) -> Self {
        assert_eq!(bar_alpha.len(), alpha.len(), "coefficient lists must align");
        let kind = classify(&bar_alpha);
        ClosedLoopForm {
            kind,
            bar_alpha,
            alpha,
            tau,
        }
    }

    pub fn order(&self) -> usize {
        self.alpha.len() - 1
    }

    /// Multiplies both sides by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        ClosedLoopForm {
            kind: self.kind,
            bar_alpha: self.bar_alpha.iter().map(|v| v * c).collect(),
            alpha: self.alpha.iter().map(|v| v * c).collect(),
            tau: self.tau,
        }
    }
}

fn classify(bar_alpha: &[f64]) -> FormKind {
    if bar_alpha[0] != 0.0 {
        FormKind::Neutral
    } else if bar_alpha.iter().any(|&v| v != 0.0) {
        FormKind::Advanced
    } else {
        FormKind::Undelayed
    }
}

/// Gains of the PD law equivalent to the iP controller.
pub fn pd_gains(sys: &LinearSystem, ctrl: &IpController) -> PdGains {
    let beta = sys.beta();
    let b = sys.input_order();
    let alpha = ctrl.alpha_gain();
    let k = ctrl.k_gain();
    let mut gains = Vec::with_capacity(b + 2);
    gains.push(-beta[0] / alpha);
    for j in 1..=b {
        gains.push(-(beta[j - 1] * k + beta[j]) / alpha);
    }
    gains.push(-beta[b] * k / alpha);
    PdGains { gains }
}

/// Closed-loop equation of the plant under the iP controller.
///
/// `K_d1` acts on `y^(b+1)`, so it lines up with `alpha[a - b - 1]`
/// (zero-based); coefficients of orders above `b + 1` are untouched.
pub fn closed_loop(sys: &LinearSystem, ctrl: &IpController) -> ClosedLoopForm {
    let gains = pd_gains(sys, ctrl).gains;
    let alpha = sys.alpha().to_vec();
    let a = sys.order();
    let b = sys.input_order();
    let offset = a - b - 1;
    let mut bar_alpha = alpha.clone();
    for (j, g) in gains.iter().enumerate() {
        let i = offset + j;
        let v = alpha[i] - g;
        let scale = 1f64.max(alpha[i].abs()).max(g.abs());
        bar_alpha[i] = if v.abs() <= ZERO_TOL * scale { 0.0 } else { v };
    }
    let kind = classify(&bar_alpha);
    ClosedLoopForm {
        kind,
        bar_alpha,
        alpha,
        tau: ctrl.tau(),
    }
}

/// `F(z) = P(z) - exp(-tau z) Q(z)`, coefficients leading-first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiPolynomial {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub tau: f64,
}

/// Value of `F` written as `mantissa * exp(log_shift)`, so that huge
/// `exp(-tau z)` factors never overflow.
#[derive(Debug, Clone, Copy)]
pub struct ScaledValue {
    pub mantissa: Complex64,
    pub log_shift: f64,
}

impl ScaledValue {
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_shift
    }

    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }
}

/// Leading-first Horner evaluation of a real polynomial and its derivative.
pub(crate) fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &coef in c {
        dp = dp * z + p;
        p = p * z + coef;
    }
    (p, dp)
}

fn horner_abs(c: &[f64], r: f64) -> f64 {
    c.iter().fold(0.0, |acc, &v| acc * r + v.abs())
}

impl QuasiPolynomial {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let (p, _) = horner(&self.p, z);
        let (q, _) = horner(&self.q, z);
        p - (-self.tau * z).exp() * q
    }

    /// `F(z)` and `F'(z) = P'(z) - exp(-tau z) (Q'(z) - tau Q(z))`.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let (p, dp) = horner(&self.p, z);
        let (q, dq) = horner(&self.q, z);
        let e = (-self.tau * z).exp();
        (p - e * q, dp - e * (dq - self.tau * q))
    }

    /// Magnitude scale `|P|(|z|) + |exp(-tau z)| |Q|(|z|)` with absolute
    /// coefficients; residual tolerances are relative to this.
    pub fn scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        horner_abs(&self.p, r) + (-self.tau * z.re).exp() * horner_abs(&self.q, r)
    }

    /// Overflow-safe evaluation. When `|exp(-tau z)| > 1` the factor is
    /// pulled out: `F = exp(-tau z) (P exp(tau z) - Q)`.
    pub fn eval_scaled(&self, z: Complex64) -> ScaledValue {
        let shift = -self.tau * z.re;
        if shift <= 0.0 {
            return ScaledValue {
                mantissa: self.eval(z),
                log_shift: 0.0,
            };
        }
        let (p, _) = horner(&self.p, z);
        let (q, _) = horner(&self.q, z);
        let inner = p * (self.tau * z).exp() - q;
        let phase = Complex64::from_polar(1.0, -self.tau * z.im);
        ScaledValue {
            mantissa: inner * phase,
            log_shift: shift,
        }
    }

    /// `ln(scale(z))`, finite far into the left half-plane.
    pub fn ln_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let lp = horner_abs(&self.p, r);
        let lq = horner_abs(&self.q, r);
        let shift = -self.tau * z.re;
        match (lp > 0.0, lq > 0.0) {
            (true, true) => {
                let (hi, lo) = if lp.ln() >= lq.ln() + shift {
                    (lp.ln(), lq.ln() + shift)
                } else {
                    (lq.ln() + shift, lp.ln())
                };
                hi + (lo - hi).exp().ln_1p()
            }
            (true, false) => lp.ln(),
            (false, true) => lq.ln() + shift,
            (false, false) => f64::NEG_INFINITY,
        }
    }
}

/// Characteristic quasi-polynomial of a closed-loop form: `P = bar_alpha`,
/// `Q = alpha`.
pub fn quasi_polynomial(form: &ClosedLoopForm) -> QuasiPolynomial {
    QuasiPolynomial {
        p: form.bar_alpha.clone(),
        q: form.alpha.clone(),
        tau: form.tau,
    }
}
