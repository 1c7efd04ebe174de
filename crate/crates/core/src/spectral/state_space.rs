//! First-order neutral realization `Y' - D Y'(t - tau) = A Y + B Y(t - tau)`
//! with `Y = (y, y', ..., y^(a-1))`.

use serde::Serialize;

use super::{Matrix, SpectralError};
use crate::synthesis::{ClosedLoopForm, FormKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSpace {
    pub d_mat: Matrix,
    pub a_mat: Matrix,
    pub b_mat: Matrix,
    /// `A + B`.
    pub a_hat: Matrix,
    /// `A_i = (alpha_i - bar_alpha_i) / bar_alpha_1` for `i = 2..=a+1`.
    pub a_coeffs: Vec<f64>,
}

pub fn state_space(form: &ClosedLoopForm) -> Result<StateSpace, SpectralError> {
    if form.kind != FormKind::Neutral || form.bar_alpha[0] == 0.0 {
        return Err(SpectralError::NotNeutral);
    }
    let a = form.order();
    let lead = form.bar_alpha[0];
    let mut d_mat = Matrix::zeros(a, a);
    let mut a_mat = Matrix::zeros(a, a);
    let mut b_mat = Matrix::zeros(a, a);
    d_mat[(a - 1, a - 1)] = form.alpha[0] / lead;
    for i in 0..a - 1 {
        a_mat[(i, i + 1)] = 1.0;
    }
    // Column j holds the coefficient of y^(j), i.e. list index a - j.
    for j in 0..a {
        a_mat[(a - 1, j)] = -form.bar_alpha[a - j] / lead;
        b_mat[(a - 1, j)] = form.alpha[a - j] / lead;
    }
    let a_hat = a_mat.add(&b_mat);
    let a_coeffs = (1..=a)
        .map(|i| (form.alpha[i] - form.bar_alpha[i]) / lead)
        .collect();
    Ok(StateSpace {
        d_mat,
        a_mat,
        b_mat,
        a_hat,
        a_coeffs,
    })
}
