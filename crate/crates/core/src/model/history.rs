use serde::{Deserialize, Serialize};

use super::ModelError;

/// Relative slack on the `[-tau, 0]` domain; delayed stage times are
/// computed in floating point and may land a few ulps outside.
const DOMAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub scale: f64,
    pub rate: f64,
}

/// Samples on a strictly increasing grid, interpolated by a monotone
/// piecewise cubic (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSampled", into = "RawSampled")]
pub struct SampledSignal {
    t: Vec<f64>,
    v: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSampled {
    t: Vec<f64>,
    v: Vec<f64>,
}

impl TryFrom<RawSampled> for SampledSignal {
    type Error = ModelError;
    fn try_from(raw: RawSampled) -> Result<Self, ModelError> {
        SampledSignal::new(raw.t, raw.v)
    }
}

impl From<SampledSignal> for RawSampled {
    fn from(s: SampledSignal) -> Self {
        RawSampled { t: s.t, v: s.v }
    }
}

impl SampledSignal {
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Result<Self, ModelError> {
        if t.len() != v.len() {
            return Err(ModelError::InvalidSamples(format!(
                "{} times but {} values",
                t.len(),
                v.len()
            )));
        }
        if t.len() < 2 {
            return Err(ModelError::InvalidSamples(
                "need at least two samples".into(),
            ));
        }
        if t.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidSamples("non-finite sample".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::InvalidSamples(
                "grid is not strictly increasing".into(),
            ));
        }
        let slopes = pchip_slopes(&t, &v);
        Ok(SampledSignal { t, v, slopes })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// Value (`order == 0`) or first derivative (`order == 1`) at `t`,
    /// clamped to the grid.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64, ModelError> {
        if order > 1 {
            return Err(ModelError::DerivativeUnavailable { order });
        }
        let t = t.clamp(self.start(), self.end());
        let k = match self.t.partition_point(|&s| s <= t) {
            0 => 0,
            p => (p - 1).min(self.t.len() - 2),
        };
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let (y0, y1) = (self.v[k], self.v[k + 1]);
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        Ok(if order == 0 {
            let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
            let h10 = s * (1.0 - s) * (1.0 - s);
            let h01 = s * s * (3.0 - 2.0 * s);
            let h11 = s * s * (s - 1.0);
            h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
        } else {
            let dh00 = 6.0 * s * s - 6.0 * s;
            let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
            let dh01 = -dh00;
            let dh11 = 3.0 * s * s - 2.0 * s;
            (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
        })
    }
}

fn pchip_slopes(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (v[k + 1] - v[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Closed-form or sampled initial function on `[-tau, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoryKind {
    /// `scale * exp(rate * t)`.
    Exponential {
        #[serde(default = "one")]
        scale: f64,
        rate: f64,
    },
    /// Sum of exponentials.
    ExpSum {
        terms: Vec<ExpTerm>,
    },
    /// Ascending powers: `coeffs[0] + coeffs[1] t + ...`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    Constant {
        value: f64,
    },
    Sampled(SampledSignal),
}

fn one() -> f64 {
    1.0
}

impl HistoryKind {
    pub fn exp(rate: f64) -> Self {
        HistoryKind::Exponential { scale: 1.0, rate }
    }

    pub fn zero() -> Self {
        HistoryKind::Constant { value: 0.0 }
    }

    /// Derivative of order `order` at `t`, without domain checks.
    fn derivative(&self, t: f64, order: usize) -> Result<f64, ModelError> {
        Ok(match self {
            HistoryKind::Exponential { scale, rate } => {
                scale * rate.powi(order as i32) * (rate * t).exp()
            }
            HistoryKind::ExpSum { terms } => terms
                .iter()
                .map(|e| e.scale * e.rate.powi(order as i32) * (e.rate * t).exp())
                .sum(),
            HistoryKind::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (p, &c) in coeffs.iter().enumerate().skip(order).rev() {
                    let falling: f64 = ((p - order + 1)..=p).map(|j| j as f64).product();
                    acc = acc * t + c * falling;
                }
                acc
            }
            HistoryKind::Constant { value } => {
                if order == 0 {
                    *value
                } else {
                    0.0
                }
            }
            HistoryKind::Sampled(s) => s.eval(t, order)?,
        })
    }

    /// Multiplies the signal by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            HistoryKind::Exponential { scale, rate } => HistoryKind::Exponential {
                scale: scale * c,
                rate: *rate,
            },
            HistoryKind::ExpSum { terms } => HistoryKind::ExpSum {
                terms: terms
                    .iter()
                    .map(|e| ExpTerm {
                        scale: e.scale * c,
                        rate: e.rate,
                    })
                    .collect(),
            },
            HistoryKind::Polynomial { coeffs } => HistoryKind::Polynomial {
                coeffs: coeffs.iter().map(|x| x * c).collect(),
            },
            HistoryKind::Constant { value } => HistoryKind::Constant { value: value * c },
            HistoryKind::Sampled(s) => HistoryKind::Sampled(
                SampledSignal::new(s.t.clone(), s.v.iter().map(|x| x * c).collect())
                    .expect("scaling preserves validity"),
            ),
        }
    }
}

/// Initial output and control functions on `[-tau, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistorySpec {
    tau: f64,
    pub output: HistoryKind,
    pub control: HistoryKind,
}

impl HistorySpec {
    pub fn new(tau: f64, output: HistoryKind, control: HistoryKind) -> Result<Self, ModelError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ModelError::InvalidDelay(tau));
        }
        for kind in [&output, &control] {
            if let HistoryKind::Sampled(s) = kind {
                let tol = DOMAIN_SLACK * tau;
                if (s.start() + tau).abs() > tol || s.end().abs() > tol {
                    return Err(ModelError::InvalidSamples(format!(
                        "grid [{}, {}] must cover exactly [{}, 0]",
                        s.start(),
                        s.end(),
                        -tau
                    )));
                }
            }
        }
        Ok(HistorySpec {
            tau,
            output,
            control,
        })
    }

    /// `y(t) = e^t`, `u(t) = 0`.
    pub fn default_for(tau: f64) -> Result<Self, ModelError> {
        HistorySpec::new(tau, HistoryKind::exp(1.0), HistoryKind::zero())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn output_at(&self, t: f64, order: usize) -> Result<f64, ModelError> {
        eval_history(&self.output, self.tau, t, order)
    }

    pub fn control_at(&self, t: f64, order: usize) -> Result<f64, ModelError> {
        eval_history(&self.control, self.tau, t, order)
    }

    pub fn scaled(&self, c: f64) -> Self {
        HistorySpec {
            tau: self.tau,
            output: self.output.scaled(c),
            control: self.control.scaled(c),
        }
    }

    /// `sup |y|` over `n + 1` equally spaced points of `[-tau, 0]`.
    pub fn output_sup(&self, n: usize) -> Result<f64, ModelError> {
        let n = n.max(1);
        let mut sup = 0.0f64;
        for j in 0..=n {
            let t = -self.tau + self.tau * j as f64 / n as f64;
            sup = sup.max(self.output_at(t, 0)?.abs());
        }
        Ok(sup)
    }
}

/// Evaluates derivative `order` of a history function at `t ∈ [-tau, 0]`.
pub fn eval_history(kind: &HistoryKind, tau: f64, t: f64, order: usize) -> Result<f64, ModelError> {
    let slack = DOMAIN_SLACK * tau;
    if !(t >= -tau - slack && t <= slack) {
        return Err(ModelError::OutOfDomain {
            t,
            lo: -tau,
            hi: 0.0,
        });
    }
    kind.derivative(t.clamp(-tau, 0.0), order)
}
