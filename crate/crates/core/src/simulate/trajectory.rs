use std::io::{self, Write};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorId {
    Loop,
    Neutral,
    Advanced,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub integrator: IntegratorId,
    pub step: f64,
    pub tau: f64,
    /// `|y|` exceeded the divergence threshold; the run stopped there.
    pub overflow: bool,
    pub truncated_at: Option<f64>,
    /// `sup |y|` over the initial function (zero for sampled runs).
    pub history_sup: f64,
}

/// Sampled solution. Channels an integrator does not produce are NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// `(y, y', ..., y^(a-1))` per sample.
    pub y_derivs: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub u_delayed: Vec<f64>,
    /// `y' - alpha u`.
    pub f_true: Vec<f64>,
    /// `y' - alpha u(t - tau)`.
    pub f_hat: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub(crate) fn new(meta: TrajectoryMeta) -> Self {
        Trajectory {
            t: Vec::new(),
            y_derivs: Vec::new(),
            u: Vec::new(),
            u_delayed: Vec::new(),
            f_true: Vec::new(),
            f_hat: Vec::new(),
            meta,
        }
    }

    pub(crate) fn push(
        &mut self,
        t: f64,
        y_derivs: Vec<f64>,
        u: f64,
        u_delayed: f64,
        alpha_gain: f64,
    ) {
        let dy = y_derivs.get(1).copied().unwrap_or(f64::NAN);
        self.t.push(t);
        self.y_derivs.push(y_derivs);
        self.u.push(u);
        self.u_delayed.push(u_delayed);
        self.f_true.push(dy - alpha_gain * u);
        self.f_hat.push(dy - alpha_gain * u_delayed);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn y(&self) -> impl Iterator<Item = f64> + '_ {
        self.y_derivs.iter().map(|v| v[0])
    }

    pub fn max_abs_y(&self) -> f64 {
        self.y().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Number of derivative channels per sample.
    pub fn width(&self) -> usize {
        self.y_derivs.first().map_or(1, |v| v.len())
    }

    /// Writes `t,y,dy,d2y,...,u,F,Fhat`. Derivative columns beyond what the
    /// integrator produced are NaN; `dy` is always present.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let cols = self.width().max(2);
        let mut header = vec!["t".to_string(), "y".to_string(), "dy".to_string()];
        for k in 2..cols {
            header.push(format!("d{k}y"));
        }
        header.extend(["u", "F", "Fhat"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row = Vec::with_capacity(cols + 4);
            row.push(fmt_num(self.t[i]));
            for k in 0..cols {
                row.push(fmt_num(
                    self.y_derivs[i].get(k).copied().unwrap_or(f64::NAN),
                ));
            }
            row.push(fmt_num(self.u[i]));
            row.push(fmt_num(self.f_true[i]));
            row.push(fmt_num(self.f_hat[i]));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Shortest round-trip representation; `Display` for `f64` never uses a
/// locale.
pub(crate) fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}
