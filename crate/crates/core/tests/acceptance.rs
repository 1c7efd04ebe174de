//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{LN_2, PI};
use std::time::{Duration, Instant};

use ipstab::model::{ExpTerm, HistoryKind, HistorySpec, IpController, LinearSystem};
use ipstab::simulate::{
    consistent_history, fit_decay, simulate_advanced, simulate_loop, simulate_neutral,
    simulate_sampled, DecayClass, Reference, Trajectory,
};
use ipstab::spectral::{
    chain_estimates, count_roots, log_norm, spectral_abscissa, spectral_abscissa_dense,
    spectral_radius, two_norm, Matrix, Rect, VerdictReason, VerdictStatus,
};
use ipstab::synthesis::{closed_loop, quasi_polynomial, FormKind};
use ipstab::tuner::{tune, Objective, TuneRequest};
use ipstab::verdict;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, pass, detail }
}

fn within_budget(start: Instant, limit: Duration, checks: &mut Vec<String>) -> bool {
    let took = start.elapsed();
    checks.push(format!(
        "runtime {:.2}s (limit {}s)",
        took.as_secs_f64(),
        limit.as_secs()
    ));
    took < limit
}

fn sys(alpha: &[f64], beta: &[f64]) -> LinearSystem {
    LinearSystem::new(alpha.to_vec(), beta.to_vec()).unwrap()
}

fn ctrl(a: f64, k: f64, tau: f64) -> IpController {
    IpController::new(a, k, tau).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

// 1. Verdicts on the worked examples.

fn criterion_1() -> Vec<Outcome> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut out = Vec::new();

    let plant2 = sys(&[1.0, 0.0, -1.0], &[1.0]);
    let mut ok = true;
    for _ in 0..10 {
        let a = rng.gen_range(0.05..50.0) * if rng.gen() { 1.0 } else { -1.0 };
        let k = rng.gen_range(-20.0..20.0);
        let v = verdict(&plant2, &ctrl(a, k, 0.1)).unwrap();
        ok &= v.status == VerdictStatus::NotExponentiallyStable
            && matches!(v.reason, VerdictReason::OrderGap { a: 2, b: 0 });
    }
    out.push(outcome(
        "1a",
        ok,
        "y'' = y + u, 10 random gains -> NotExponentiallyStable".into(),
    ));

    let plant1 = sys(&[1.0, -1.0], &[1.0]);
    let v = verdict(&plant1, &ctrl(-1.0, 100.0, 0.01)).unwrap();
    out.push(outcome(
        "1b",
        v.status == VerdictStatus::Unstable && v.reason == VerdictReason::AdvancedType,
        format!(
            "y' = y + u, alpha=-1, K=100 -> {:?}/{:?}",
            v.status, v.reason
        ),
    ));

    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..10 {
        let k = rng.gen_range(-50.0..50.0);
        let v = verdict(&plant1, &ctrl(-2.0, k, 0.1)).unwrap();
        worst = worst.max((v.certificate.r.unwrap() - 2.0).abs());
        ok &= v.status == VerdictStatus::Unstable;
    }
    out.push(outcome(
        "1c",
        ok && worst <= 1e-12,
        format!("y' = y + u, alpha=-2, random K -> Unstable, max |r - 2| = {worst:.1e}"),
    ));

    let plant3 = sys(&[1.0, -1.0], &[2.0]);
    let mut ok = true;
    let mut worst = 0.0f64;
    for k in [1.0, 2.0, 3.0] {
        let v = verdict(&plant3, &ctrl(0.01, k, 0.1)).unwrap();
        let c = &v.certificate;
        // bar_alpha = (201, 200K - 1); A_hat = -200K/201, B = -1/201, D = 1/201.
        let a_hat = -200.0 * k / 201.0;
        let oracle = [
            (c.r.unwrap(), 1.0 / 201.0),
            (c.s_hat.unwrap(), a_hat),
            (c.mu_hat.unwrap(), a_hat),
            (c.cond3_lhs.unwrap(), 1.1),
            (c.cond3_rhs.unwrap(), 201.0),
            (c.cond4_lhs.unwrap(), 201.0 * a_hat + 1.1 * a_hat.abs()),
        ];
        for (got, want) in oracle {
            worst = worst.max((got - want).abs());
        }
        ok &= v.status == VerdictStatus::ExponentiallyStable
            && v.reason == VerdictReason::ConditionsHold;
        ok &= (c.r.unwrap() - 1.0 / 201.0).abs() <= 1e-12;
    }
    out.push(outcome(
        "1d",
        ok && worst <= 1e-10,
        format!("y' - y = 2u, alpha=0.01, K=1,2,3 -> ExponentiallyStable, max certificate error {worst:.1e}"),
    ));

    let v = verdict(&plant3, &ctrl(1000.0, 10.0, 0.1)).unwrap();
    let fails3 =
        matches!(&v.reason, VerdictReason::ConditionsFailed { failed } if failed.contains(&3));
    let c = &v.certificate;
    let err = (c.cond3_lhs.unwrap() - 1.1)
        .abs()
        .max((c.cond3_rhs.unwrap() - 1.002).abs());
    let mut checks = vec![format!(
        "y' - y = 2u, alpha=1000, K=10 -> {:?}, condition 3: {:.4} vs {:.4}",
        v.status,
        c.cond3_lhs.unwrap(),
        c.cond3_rhs.unwrap()
    )];
    let timely = within_budget(start, Duration::from_secs(1), &mut checks);
    out.push(outcome(
        "1e",
        v.status == VerdictStatus::Inconclusive && fails3 && err <= 1e-10 && timely,
        checks.join("; "),
    ));
    out
}

// 2. Neutral root chains of y' = y + u, alpha=-2, tau=0.01.

fn criterion_2() -> Vec<Outcome> {
    let start = Instant::now();
    let tau = 0.01;
    let form = closed_loop(&sys(&[1.0, -1.0], &[1.0]), &ctrl(-2.0, 10.0, tau));
    let qp = quasi_polynomial(&form);
    let limit = LN_2 / tau;
    let chain: Vec<_> = chain_estimates(&qp, -10..=10, true)
        .unwrap()
        .into_iter()
        .filter(|c| c.k != 0)
        .collect();
    let mut ok = chain.len() == 20;
    let mut worst_res = 0.0f64;
    let mut worst_re = 0.0f64;
    for c in &chain {
        match (c.refined, c.residual) {
            (Some(z), Some(res)) => {
                worst_res = worst_res.max(res);
                if c.k.abs() >= 3 {
                    worst_re = worst_re.max(rel(z.re, limit));
                }
            }
            _ => ok = false,
        }
    }
    let refined = outcome(
        "2a",
        ok && worst_res <= 1e-9 && worst_re <= 0.05,
        format!(
            "20 chain seeds converge, max |F| at refined roots {worst_res:.1e}, \
             max real-part deviation from ln2/tau {:.2}% (|k| >= 3)",
            100.0 * worst_re
        ),
    );

    let half = 2.0 * PI * 10.0 / tau * 1.05;
    let rect = Rect {
        re_min: 60.0,
        re_max: 80.0,
        im_min: -half,
        im_max: half,
    };
    let inside = chain_estimates(&qp, -12..=12, false)
        .unwrap()
        .iter()
        .filter(|c| rect.contains(c.estimate))
        .count() as i64;
    let counted = count_roots(&qp, rect);
    let mut checks = vec![format!(
        "count_roots = {counted:?}, estimates inside = {inside}"
    )];
    let timely = within_budget(start, Duration::from_secs(5), &mut checks);
    let counted_ok = matches!(counted, Ok(n) if (n - inside).abs() <= 1);
    vec![
        refined,
        outcome("2b", counted_ok && timely, checks.join("; ")),
    ]
}

// 3. Loop simulator against the neutral integrator.

fn random_neutral_case(rng: &mut StdRng) -> (LinearSystem, IpController, HistorySpec) {
    loop {
        let a: usize = rng.gen_range(1..=3);
        let mut alpha = vec![rng.gen_range(0.5..2.0)];
        alpha.extend((0..a).map(|_| rng.gen_range(-2.0..2.0)));
        let mut beta = vec![rng.gen_range(0.3..2.0) * if rng.gen() { 1.0 } else { -1.0 }];
        beta.extend((0..a - 1).map(|_| rng.gen_range(-2.0..2.0)));
        let plant = sys(&alpha, &beta);
        let gain = rng.gen_range(0.5..5.0) * if rng.gen() { 1.0 } else { -1.0 };
        let tau = [0.05, 0.1, 0.2][rng.gen_range(0..3)];
        let c = ctrl(gain, rng.gen_range(0.0..5.0), tau);
        let form = closed_loop(&plant, &c);
        if form.kind != FormKind::Neutral || form.bar_alpha[0].abs() < 0.1 * alpha[0] {
            continue;
        }
        let mut rates: Vec<f64> = Vec::new();
        while rates.len() < a {
            let r = rng.gen_range(-1.5..1.5);
            if rates.iter().all(|q| (q - r).abs() > 0.2) {
                rates.push(r);
            }
        }
        if let Ok(h) = consistent_history(&plant, &c, &rates) {
            return (plant, c, h);
        }
    }
}

fn max_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    a.y().zip(b.y()).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

fn criterion_3() -> Vec<Outcome> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(3);
    let mut agree = 0;
    let mut converging = 0;
    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    for i in 0..25 {
        let (plant, c, hist) = random_neutral_case(&mut rng);
        let tau = c.tau();
        let form = closed_loop(&plant, &c);
        let run = |div: f64| {
            let h = tau / div;
            let l = simulate_loop(&plant, &c, &hist, 10.0 * tau, h);
            let n = simulate_neutral(&form, &hist, 10.0 * tau, h);
            (l, n)
        };
        match (run(64.0), run(128.0)) {
            ((Ok(l1), Ok(n1)), (Ok(l2), Ok(n2))) => {
                let scale = l2.max_abs_y();
                let e1 = max_gap(&l1, &n1);
                let e2 = max_gap(&l2, &n2);
                worst = worst.max(e1 / scale);
                if e1 <= 1e-3 * scale {
                    agree += 1;
                }
                if e1 >= 1.8 * e2 {
                    converging += 1;
                }
            }
            other => errors.push(format!("case {i}: {:?}", other.0 .0.err())),
        }
    }
    let mut checks = vec![format!(
        "{agree}/25 within 1e-3 relative (worst {worst:.1e}), {converging}/25 halving ratio >= 1.8"
    )];
    if !errors.is_empty() {
        checks.push(format!("errors: {}", errors.join(", ")));
    }
    let timely = within_budget(start, Duration::from_secs(30), &mut checks);
    vec![outcome(
        "3",
        agree == 25 && converging >= 20 && timely,
        checks.join("; "),
    )]
}

// 4. Qualitative behaviour of the worked examples.

fn criterion_4() -> Vec<Outcome> {
    let start = Instant::now();
    let plant1 = sys(&[1.0, -1.0], &[1.0]);
    let mut out = Vec::new();

    let tau = 0.01;
    let form = closed_loop(&plant1, &ctrl(-1.0, 100.0, tau));
    let hist = HistorySpec::default_for(tau).unwrap();
    let tr = simulate_advanced(&form, &hist, 0.5, tau / 64.0).unwrap();
    let onset =
        tr.t.iter()
            .zip(tr.y())
            .find(|(_, y)| y.abs() > 1e3)
            .map(|(t, _)| *t);
    let fit = fit_decay(&tr, 0.0).unwrap();
    out.push(outcome(
        "4a",
        onset.is_some_and(|t| t < 0.5) && fit.classification == DecayClass::Diverging,
        format!(
            "y' = y + u, alpha=-1, K=100: |y| > 1e3 at t = {onset:?}, fit {:?}",
            fit.classification
        ),
    ));

    let mut ok = true;
    let mut growth = Vec::new();
    let mut notes = Vec::new();
    for tau in [0.1, 0.05, 0.01] {
        let form = closed_loop(&plant1, &ctrl(-2.0, 10.0, tau));
        let hist = HistorySpec::default_for(tau).unwrap();
        let tr = simulate_neutral(&form, &hist, 40.0 * tau, tau / 64.0).unwrap();
        let fit = fit_decay(&tr, 0.0).unwrap();
        let rate = -fit.sigma;
        ok &= rel(rate, LN_2 / tau) <= 0.15 && fit.classification == DecayClass::Diverging;
        notes.push(format!(
            "tau={tau}: rate {rate:.2} vs ln2/tau {:.2}",
            LN_2 / tau
        ));
        growth.push(rate);
    }
    let faster = growth.windows(2).all(|w| w[1] > w[0]);
    notes.push(format!("faster as tau shrinks: {faster}"));
    out.push(outcome("4b", ok && faster, notes.join(", ")));

    let tau = 0.1;
    let plant2 = sys(&[1.0, 0.0, -1.0], &[1.0]);
    let form = closed_loop(&plant2, &ctrl(0.1, 5.0, tau));
    let hist = HistorySpec::default_for(tau).unwrap();
    let tr = simulate_neutral(&form, &hist, 20.0, tau / 64.0).unwrap();
    let fit = fit_decay(&tr, 0.0).unwrap();
    let reached = tr.t.last().copied().unwrap_or(0.0);
    out.push(outcome(
        "4c",
        !tr.meta.overflow && fit.classification != DecayClass::Diverging && reached >= 20.0 - 1e-9,
        format!(
            "y'' = y + u over [0, {reached:.1}]: overflow {}, fit {:?}, max |y| {:.3}",
            tr.meta.overflow,
            fit.classification,
            tr.max_abs_y()
        ),
    ));

    let plant3 = sys(&[1.0, -1.0], &[2.0]);
    let hist = HistorySpec::default_for(tau).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for k in [1.0, 2.0, 3.0] {
        let tr = simulate_loop(&plant3, &ctrl(0.01, k, tau), &hist, 10.0, tau / 64.0).unwrap();
        let fit = fit_decay(&tr, 0.0).unwrap();
        ok &= fit.classification == DecayClass::Decaying && fit.sigma > 0.0;
        notes.push(format!("K={k}: sigma {:.3}", fit.sigma));
    }
    let tr = simulate_loop(&plant3, &ctrl(1000.0, 10.0, tau), &hist, 30.0, tau / 64.0).unwrap();
    let fit = fit_decay(&tr, 0.0).unwrap();
    ok &= fit.classification == DecayClass::Diverging;
    notes.push(format!("alpha=1000, K=10: {:?}", fit.classification));
    let timely = within_budget(start, Duration::from_secs(60), &mut notes);
    out.push(outcome("4d", ok && timely, notes.join(", ")));
    out
}

// 5. Sampled iP controller on the identified valve model.

fn criterion_5() -> Vec<Outcome> {
    let start = Instant::now();
    let valve = sys(&[1.0, 32.16, 1875.0], &[65.82, -85.89]);
    let tau = 0.05;
    let step = Reference::Step { level: 1.0 };
    let mut out = Vec::new();

    let tr = simulate_sampled(&valve, &ctrl(2000.0, 4000.0, tau), &step, 10.0, 20).unwrap();
    let fit = fit_decay(&tr, 0.0).unwrap();
    let window_max = |lo: f64, hi: f64| {
        tr.t.iter()
            .zip(tr.y())
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .fold(0.0f64, |m, (_, y)| m.max(y.abs()))
    };
    // Envelope over one second at each end of the last half.
    let (early, late) = (window_max(5.0, 6.0), window_max(9.0, 10.0));
    let not_shrinking = tr.meta.overflow || late >= 0.5 * early;
    out.push(outcome(
        "5a",
        fit.classification != DecayClass::Decaying && not_shrinking,
        format!(
            "alpha=2000, K=4000: fit {:?}, overflow {} (at {:?}), envelope {early:.3e} -> {late:.3e}",
            fit.classification, tr.meta.overflow, tr.meta.truncated_at
        ),
    ));

    let tr = simulate_sampled(&valve, &ctrl(2.5, 5.0, tau), &step, 10.0, 20).unwrap();
    let fit = fit_decay(&tr, 0.0).unwrap();
    out.push(outcome(
        "5b",
        fit.classification == DecayClass::Decaying,
        format!(
            "alpha=2.5, K=5 toward step: fit {:?}, sigma {:.3}, overflow {} (at {:?})",
            fit.classification, fit.sigma, tr.meta.overflow, tr.meta.truncated_at
        ),
    ));

    let mut ok = true;
    let mut notes = Vec::new();
    let lhs_oracle = 0.05 * (1875.0f64.powi(2) + 32.16f64.powi(2)).sqrt() + 1.0;
    for (a, k) in [(2000.0, 4000.0), (2.5, 5.0)] {
        let v = verdict(&valve, &ctrl(a, k, tau)).unwrap();
        let c = &v.certificate;
        let rhs_oracle = (1.0 + 65.82 / a).abs();
        let err = (c.cond3_lhs.unwrap() - lhs_oracle)
            .abs()
            .max((c.cond3_rhs.unwrap() - rhs_oracle).abs());
        let fails3 =
            matches!(&v.reason, VerdictReason::ConditionsFailed { failed } if failed.contains(&3));
        ok &= v.status == VerdictStatus::Inconclusive && fails3 && err <= 1e-10;
        notes.push(format!(
            "alpha={a}, K={k}: {:?}, condition 3 {:.3} vs {:.5}",
            v.status,
            c.cond3_lhs.unwrap(),
            c.cond3_rhs.unwrap()
        ));
    }
    let timely = within_budget(start, Duration::from_secs(30), &mut notes);
    out.push(outcome("5c", ok && timely, notes.join(", ")));
    out
}

// 6. Numeric kernel properties over random instances.

fn random_matrix(rng: &mut StdRng, n: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect();
    Matrix::from_rows(&rows)
}

fn criterion_6() -> Vec<Outcome> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(6);
    let trials = 1000;
    let (mut bound, mut shift, mut radius, mut poly) = (0, 0, 0, 0);
    let mut worst_poly = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(2..=6);
        let m = random_matrix(&mut rng, n);
        let mu = log_norm(&m).unwrap();
        let s = spectral_abscissa_dense(&m).unwrap();
        let scale = m.frobenius().max(1.0);
        if s <= mu + 1e-10 * scale {
            bound += 1;
        }
        let c = rng.gen_range(-5.0..5.0);
        let shifted = m.add(&Matrix::identity(n).scale(c));
        if (log_norm(&shifted).unwrap() - mu - c).abs() <= 1e-10 * (scale + c.abs()) {
            shift += 1;
        }
        if spectral_radius(&m).unwrap() <= two_norm(&m) * (1.0 + 1e-12) {
            radius += 1;
        }

        let deg = rng.gen_range(1..=8);
        let mut p = vec![1.0];
        p.extend((0..deg).map(|_| rng.gen_range(-2.0..2.0)));
        let comp = Matrix::companion(&p);
        let via_roots = spectral_abscissa(&comp).unwrap();
        let via_dense = spectral_abscissa_dense(&comp).unwrap();
        let err = (via_roots - via_dense).abs() / via_roots.abs().max(1.0);
        worst_poly = worst_poly.max(err);
        if err <= 1e-8 {
            poly += 1;
        }
    }
    let mut notes = vec![format!(
        "{trials} trials: s <= mu {bound}, mu shift {shift}, rho <= norm {radius}, \
         abscissa agreement {poly} (worst {worst_poly:.1e})"
    )];
    let timely = within_budget(start, Duration::from_secs(20), &mut notes);
    let all = [bound, shift, radius, poly].iter().all(|&c| c == trials);
    vec![outcome("6", all && timely, notes.join("; "))]
}

// 7. Certified gains never produce a non-decaying simulation.

fn random_history(rng: &mut StdRng, tau: f64) -> HistorySpec {
    let output = match rng.gen_range(0..3) {
        0 => HistoryKind::Exponential {
            scale: rng.gen_range(-2.0..2.0),
            rate: rng.gen_range(-3.0..3.0),
        },
        1 => HistoryKind::Polynomial {
            coeffs: (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        },
        _ => HistoryKind::ExpSum {
            terms: (0..2)
                .map(|_| ExpTerm {
                    scale: rng.gen_range(-1.0..1.0),
                    rate: rng.gen_range(-5.0..5.0),
                })
                .collect(),
        },
    };
    let control = HistoryKind::Constant {
        value: rng.gen_range(-1.0..1.0),
    };
    HistorySpec::new(tau, output, control).unwrap()
}

fn criterion_7() -> Vec<Outcome> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(7);
    let thetas = vec![1e-3, 3e-3, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0];
    let ks = vec![0.5, 1.0, 2.0, 3.0, 5.0];
    let mut points = Vec::new();
    for _ in 0..6 {
        let plant = sys(
            &[1.0, rng.gen_range(-1.5..-0.5)],
            &[rng.gen_range(1.5..2.5) * if rng.gen() { 1.0 } else { -1.0 }],
        );
        let tau = [0.05, 0.1, 0.2][rng.gen_range(0..3)];
        let req = TuneRequest::new(
            plant.clone(),
            tau,
            thetas.clone(),
            ks.clone(),
            Objective::MaxSigmaProxy,
        )
        .unwrap();
        for p in tune(&req).unwrap().feasible {
            points.push((plant.clone(), ctrl(p.alpha, p.k, tau)));
        }
    }
    points.shuffle(&mut rng);
    points.truncate(50);
    let mut counterexamples = Vec::new();
    for (plant, c) in &points {
        for _ in 0..5 {
            let hist = random_history(&mut rng, c.tau());
            let tr = simulate_loop(plant, c, &hist, 20.0, c.tau() / 8.0).unwrap();
            let fit = fit_decay(&tr, 0.0).unwrap();
            if fit.classification != DecayClass::Decaying {
                counterexamples.push(format!(
                    "alpha={}, K={}, tau={}: {:?}",
                    c.alpha_gain(),
                    c.k_gain(),
                    c.tau(),
                    fit.classification
                ));
            }
        }
    }
    let mut notes = vec![format!(
        "{} certified points x 5 histories, {} counterexamples",
        points.len(),
        counterexamples.len()
    )];
    notes.extend(counterexamples.iter().take(3).cloned());
    within_budget(start, Duration::from_secs(3600), &mut notes);
    vec![outcome(
        "7",
        points.len() == 50 && counterexamples.is_empty(),
        notes.join("; "),
    )]
}

fn main() {
    let criteria: [fn() -> Vec<Outcome>; 7] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
    ];
    let mut failed = 0;
    let mut total = 0;
    for run in criteria {
        for o in run() {
            println!(
                "{} criterion {}: {}",
                if o.pass { "PASS" } else { "FAIL" },
                o.id,
                o.detail
            );
            total += 1;
            failed += usize::from(!o.pass);
        }
    }
    println!("{} of {total} acceptance checks passed", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
