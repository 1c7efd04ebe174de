//! Initial functions compatible with the running loop at `t = 0`.

use super::SimError;
use crate::model::{ExpTerm, HistoryKind, HistorySpec, IpController, LinearSystem};

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &v| acc * x + v)
}

/// Exponential-sum history `y = sum c_j e^{rate_j t}` with the matching
/// plant input on `[-tau, 0]`, where the weights make `u` and its first
/// `b - 1` derivatives continuous when the controller takes over at 0.
///
/// Needs `b + 1` distinct rates, none a zero of `beta`.
pub fn consistent_history(
    sys: &LinearSystem,
    ctrl: &IpController,
    rates: &[f64],
) -> Result<HistorySpec, SimError> {
    let b = sys.input_order();
    if rates.len() != b + 1 {
        return Err(SimError::InconsistentHistory(format!(
            "need {} rates, got {}",
            b + 1,
            rates.len()
        )));
    }
    let tau = ctrl.tau();
    let mut gains = Vec::with_capacity(rates.len());
    for &lam in rates {
        let den = poly_eval(sys.beta(), lam);
        if den.abs() < 1e-12 * poly_eval(&abs(sys.beta()), lam.abs()).max(1e-300) {
            return Err(SimError::InconsistentHistory(format!(
                "rate {lam} is a zero of beta"
            )));
        }
        gains.push(poly_eval(sys.alpha(), lam) / den);
    }
    // Row m: continuity of u^(m) at t = 0.
    let rows: Vec<Vec<f64>> = (0..b)
        .map(|m| {
            rates
                .iter()
                .zip(&gains)
                .map(|(&lam, &g)| {
                    (g * (1.0 - (-lam * tau).exp()) + (ctrl.k_gain() + lam) / ctrl.alpha_gain())
                        * lam.powi(m as i32)
                })
                .collect()
        })
        .collect();
    let mut weights = null_vector(&rows, b + 1);
    let norm = weights.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(SimError::InconsistentHistory(
            "continuity conditions admit only the zero history".into(),
        ));
    }
    for w in &mut weights {
        *w /= norm;
    }
    let output = HistoryKind::ExpSum {
        terms: weights
            .iter()
            .zip(rates)
            .map(|(&c, &rate)| ExpTerm { scale: c, rate })
            .collect(),
    };
    let control = HistoryKind::ExpSum {
        terms: weights
            .iter()
            .zip(rates.iter().zip(&gains))
            .map(|(&c, (&rate, &g))| ExpTerm { scale: c * g, rate })
            .collect(),
    };
    Ok(HistorySpec::new(tau, output, control)?)
}

fn abs(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.abs()).collect()
}

/// Signed minors of an `n - 1` by `n` matrix: a vector orthogonal to
/// every row.
fn null_vector(rows: &[Vec<f64>], n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * det(minor)
        })
        .collect()
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            d = -d;
        }
        d *= m[col][col];
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            for j in col..n {
                m[i][j] -= f * m[col][j];
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_small() {
        assert_eq!(det(vec![]), 1.0);
        assert!((det(vec![vec![2.0, 1.0], vec![4.0, 3.0]]) - 2.0).abs() < 1e-15);
        let nv = null_vector(&[vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 4.0]], 3);
        assert!((nv[0] + 2.0 * nv[1] + 3.0 * nv[2]).abs() < 1e-14);
        assert!((nv[1] + 4.0 * nv[2]).abs() < 1e-14);
    }

    #[test]
    fn plant_equation_and_continuity_hold() {
        let sys = LinearSystem::new(vec![1.0, 0.5, -2.0, 1.0], vec![1.5, -0.3, 2.0]).unwrap();
        let ctrl = IpController::new(0.7, 1.3, 0.2).unwrap();
        let hist = consistent_history(&sys, &ctrl, &[0.3, -0.8, 1.1]).unwrap();
        // alpha(D) y = beta(D) u at an interior point, by exact derivatives.
        let t = -0.07;
        let lhs: f64 = (0..4)
            .map(|i| sys.alpha()[i] * hist.output_at(t, 3 - i).unwrap())
            .sum();
        let rhs: f64 = (0..3)
            .map(|i| sys.beta()[i] * hist.control_at(t, 2 - i).unwrap())
            .sum();
        assert!((lhs - rhs).abs() < 1e-12);
        for m in 0..2 {
            let jump = hist.control_at(-0.2, m).unwrap()
                - (1.3 * hist.output_at(0.0, m).unwrap() + hist.output_at(0.0, m + 1).unwrap())
                    / 0.7
                - hist.control_at(0.0, m).unwrap();
            assert!(jump.abs() < 1e-12, "m = {m}: {jump}");
        }
    }

    #[test]
    fn rate_count_checked() {
        let sys = LinearSystem::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        let ctrl = IpController::new(1.0, 1.0, 0.1).unwrap();
        assert!(consistent_history(&sys, &ctrl, &[1.0, 2.0]).is_err());
        assert!(consistent_history(&sys, &ctrl, &[1.0]).is_ok());
    }
}
