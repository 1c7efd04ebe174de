use ipstab::model::{HistoryKind, HistorySpec, IpController, LinearSystem};
use ipstab::simulate::{fit_decay, simulate_loop, DecayClass};
use ipstab::spectral::chain_estimates;
use ipstab::synthesis::{closed_loop, quasi_polynomial};
use ipstab::{verdict, VerdictStatus};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn chain_gaps(alpha: &[f64], beta: &[f64], gain: f64, k: f64, tau: f64) -> (f64, f64) {
    let sys = LinearSystem::new(alpha.to_vec(), beta.to_vec()).unwrap();
    let form = closed_loop(&sys, &IpController::new(gain, k, tau).unwrap());
    let chain = chain_estimates(&quasi_polynomial(&form), -10..=10, true).unwrap();
    let gaps = |lo: i64, hi: i64| {
        median(
            chain
                .iter()
                .filter(|c| (lo..=hi).contains(&c.k.abs()))
                .map(|c| c.gap().expect("refinement converged"))
                .collect(),
        )
    };
    (gaps(1, 4), gaps(5, 10))
}

/// Plant `(alpha, beta)` with gains `(alpha, K, tau)`.
type Case<'a> = (&'a [f64], &'a [f64], f64, f64, f64);

#[test]
fn chain_gap_shrinks_with_index() {
    let cases: [Case; 4] = [
        (&[1.0, -1.0], &[1.0], -2.0, 10.0, 0.01),
        (&[1.0, -1.0], &[1.0], -2.0, 10.0, 0.1),
        (&[1.0, -1.0], &[2.0], 0.5, 2.0, 0.1),
        (
            &[1.0, 32.16, 1875.0],
            &[65.82, -85.89],
            2000.0,
            4000.0,
            0.05,
        ),
    ];
    for (alpha, beta, gain, k, tau) in cases {
        let (low, high) = chain_gaps(alpha, beta, gain, k, tau);
        assert!(
            high < low,
            "{alpha:?}: median gap {low} for |k|<=4, {high} for |k|>=5"
        );
    }
}

#[test]
fn certified_gains_decay_from_random_histories() {
    let sys = LinearSystem::new(vec![1.0, -1.0], vec![2.0]).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    for (gain, k) in [(0.01, 1.0), (0.01, 3.0), (0.1, 0.5)] {
        let ctrl = IpController::new(gain, k, 0.1).unwrap();
        assert_eq!(
            verdict(&sys, &ctrl).unwrap().status,
            VerdictStatus::ExponentiallyStable
        );
        for _ in 0..20 {
            let hist = HistorySpec::new(
                0.1,
                HistoryKind::Exponential {
                    scale: rng.gen_range(-3.0..3.0),
                    rate: rng.gen_range(-4.0..4.0),
                },
                HistoryKind::Constant {
                    value: rng.gen_range(-1.0..1.0),
                },
            )
            .unwrap();
            let tr = simulate_loop(&sys, &ctrl, &hist, 25.0, 0.1 / 8.0).unwrap();
            let fit = fit_decay(&tr, 0.0).unwrap();
            assert_eq!(
                fit.classification,
                DecayClass::Decaying,
                "{gain} {k}: {fit:?}"
            );
            assert!(fit.sigma > 0.0);
        }
    }
}
