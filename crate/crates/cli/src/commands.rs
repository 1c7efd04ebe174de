use std::fmt::Write as _;

use ipstab::model::IpController;
use ipstab::simulate::{
    fit_decay, simulate_advanced, simulate_loop, simulate_neutral, simulate_sampled, DecayFit,
    IntegratorId, SimError, Trajectory,
};
use ipstab::spectral::{
    chain_estimates, count_roots, Certificate, PlantLabel, Rect, RootChainEstimate, SpectralError,
    StabilityVerdict, VerdictReason, VerdictStatus,
};
use ipstab::synthesis::{closed_loop, quasi_polynomial, ClosedLoopForm, FormKind};
use ipstab::tuner::{tune, FeasiblePoint, InfeasiblePoint, Objective, TuneRequest};
use ipstab::verdict;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{IntegratorChoice, RunConfig};
use crate::error::CliError;

/// A command's primary JSON report plus any extra files.
pub struct Output {
    pub name: &'static str,
    pub json: String,
    pub files: Vec<(&'static str, Vec<u8>)>,
}

// analyze

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub status: VerdictStatus,
    pub reason: &'static str,
    pub failed_conditions: Vec<u8>,
    pub note: &'static str,
    pub certificate: CertificateSummary,
    pub closed_loop: ClosedLoopSummary,
    pub chain: ChainSummary,
}

#[derive(Debug, Serialize)]
pub struct CertificateSummary {
    pub r: Option<f64>,
    pub s_hat: Option<f64>,
    pub mu_hat: Option<f64>,
    pub cond3_lhs: Option<f64>,
    pub cond3_rhs: Option<f64>,
    pub cond4_lhs: Option<f64>,
    pub conditions: Option<[bool; 4]>,
    pub plant_label: Option<PlantLabel>,
    pub plant_eigenvalues: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize)]
pub struct ClosedLoopSummary {
    pub kind: FormKind,
    pub bar_alpha: Vec<f64>,
    pub alpha: Vec<f64>,
    pub tau: f64,
}

#[derive(Debug, Serialize)]
pub struct ChainSummary {
    /// `alpha_1 / bar_alpha_1`; null unless the form is neutral.
    pub ratio: Option<f64>,
    /// `ln|ratio| / tau`.
    pub real_limit: Option<f64>,
}

fn reason_tag(r: &VerdictReason) -> &'static str {
    match r {
        VerdictReason::OrderGap { .. } => "OrderGap",
        VerdictReason::AdvancedType => "AdvancedType",
        VerdictReason::NeutralRatioAboveOne => "NeutralRatioAboveOne",
        VerdictReason::NeutralRatioEqualOne => "NeutralRatioEqualOne",
        VerdictReason::ConditionsHold => "ConditionsHold",
        VerdictReason::ConditionsFailed { .. } => "ConditionsFailed",
        VerdictReason::UndelayedPlant { .. } => "UndelayedPlant",
    }
}

fn status_note(s: VerdictStatus) -> &'static str {
    match s {
        VerdictStatus::ExponentiallyStable => {
            "sufficient conditions hold: exponential stability is certified"
        }
        VerdictStatus::Inconclusive => {
            "sufficient conditions fail: stability is neither certified nor excluded"
        }
        VerdictStatus::NotExponentiallyStable => {
            "not exponentially stable; asymptotic stability is not excluded"
        }
        VerdictStatus::Unstable => "unstable",
        VerdictStatus::UndelayedReduced => {
            "closed loop reduces to the delayed plant dynamics; see plant_label"
        }
    }
}

fn chain_summary(form: &ClosedLoopForm) -> ChainSummary {
    if form.kind != FormKind::Neutral {
        return ChainSummary {
            ratio: None,
            real_limit: None,
        };
    }
    let ratio = form.alpha[0] / form.bar_alpha[0];
    ChainSummary {
        ratio: Some(ratio),
        real_limit: Some(ratio.abs().ln() / form.tau),
    }
}

fn complex_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn analyze_report(v: &StabilityVerdict) -> AnalyzeReport {
    let c: &Certificate = &v.certificate;
    let (failed, plant_label) = match &v.reason {
        VerdictReason::ConditionsFailed { failed } => (failed.clone(), None),
        VerdictReason::UndelayedPlant { plant } => (Vec::new(), Some(*plant)),
        _ => (Vec::new(), None),
    };
    AnalyzeReport {
        status: v.status,
        reason: reason_tag(&v.reason),
        failed_conditions: failed,
        note: status_note(v.status),
        certificate: CertificateSummary {
            r: c.r,
            s_hat: c.s_hat,
            mu_hat: c.mu_hat,
            cond3_lhs: c.cond3_lhs,
            cond3_rhs: c.cond3_rhs,
            cond4_lhs: c.cond4_lhs,
            conditions: c.conditions,
            plant_label,
            plant_eigenvalues: c.plant_eigenvalues.as_deref().map(complex_pairs),
        },
        closed_loop: ClosedLoopSummary {
            kind: v.form.kind,
            bar_alpha: v.form.bar_alpha.clone(),
            alpha: v.form.alpha.clone(),
            tau: v.form.tau,
        },
        chain: chain_summary(&v.form),
    }
}

pub fn analyze(cfg: &RunConfig) -> Result<Output, CliError> {
    let v = verdict(&cfg.system()?, &cfg.controller()?)?;
    Ok(Output {
        name: "analyze.json",
        json: crate::output::to_json(&analyze_report(&v))?,
        files: Vec::new(),
    })
}

// simulate

#[derive(Debug, Default)]
pub struct SimOverrides {
    pub integrator: Option<IntegratorChoice>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub integrator: IntegratorId,
    pub form_kind: FormKind,
    pub step: f64,
    pub tau: f64,
    pub horizon: f64,
    pub samples: usize,
    pub overflow: bool,
    pub truncated_at: Option<f64>,
    pub history_sup: f64,
    pub max_abs_y: f64,
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
}

fn resolve(choice: IntegratorChoice, kind: FormKind) -> IntegratorChoice {
    match (choice, kind) {
        (IntegratorChoice::Auto, FormKind::Neutral) => IntegratorChoice::Neutral,
        (IntegratorChoice::Auto, FormKind::Advanced) => IntegratorChoice::Advanced,
        (IntegratorChoice::Auto, FormKind::Undelayed) => IntegratorChoice::Loop,
        (c, _) => c,
    }
}

fn run_integrator(
    cfg: &RunConfig,
    ctrl: &IpController,
    choice: IntegratorChoice,
    form: &ClosedLoopForm,
    horizon: f64,
    step: f64,
) -> Result<Trajectory, CliError> {
    let sys = cfg.system()?;
    let hist = cfg.history()?;
    let tr = match choice {
        IntegratorChoice::Loop | IntegratorChoice::Auto => {
            simulate_loop(&sys, ctrl, &hist, horizon, step)
        }
        IntegratorChoice::Neutral => simulate_neutral(form, &hist, horizon, step),
        IntegratorChoice::Advanced => simulate_advanced(form, &hist, horizon, step),
        IntegratorChoice::Sampled => simulate_sampled(
            &sys,
            ctrl,
            &cfg.simulation.reference,
            horizon,
            cfg.simulation.substeps,
        ),
    };
    Ok(tr?)
}

pub fn simulate(cfg: &RunConfig, over: &SimOverrides) -> Result<Output, CliError> {
    let ctrl = cfg.controller()?;
    let form = closed_loop(&cfg.system()?, &ctrl);
    let choice = resolve(
        over.integrator.unwrap_or(cfg.simulation.integrator),
        form.kind,
    );
    let horizon = over.horizon.unwrap_or(cfg.simulation.horizon);
    let step = over
        .step
        .or(cfg.simulation.step)
        .unwrap_or(ctrl.tau() / 64.0);
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::Config(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let tr = run_integrator(cfg, &ctrl, choice, &form, horizon, step)?;
    let (fit, fit_error) = match fit_decay(&tr, cfg.simulation.skip) {
        Ok(f) => (Some(f), None),
        Err(e @ SimError::TooShort { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let summary = SimulateSummary {
        integrator: tr.meta.integrator,
        form_kind: form.kind,
        step: tr.meta.step,
        tau: tr.meta.tau,
        horizon,
        samples: tr.len(),
        overflow: tr.meta.overflow,
        truncated_at: tr.meta.truncated_at,
        history_sup: tr.meta.history_sup,
        max_abs_y: tr.max_abs_y(),
        fit,
        fit_error,
    };
    let mut csv = Vec::new();
    tr.write_csv(&mut csv)?;
    Ok(Output {
        name: "simulate.json",
        json: crate::output::to_json(&summary)?,
        files: vec![("simulate.csv", csv)],
    })
}

// roots

#[derive(Debug, Serialize)]
pub struct RootsReport {
    pub form_kind: FormKind,
    pub chain: ChainSummary,
    pub k_min: i64,
    pub k_max: i64,
    pub chain_rows: usize,
    pub refined: usize,
    pub rectangles: Vec<RectCount>,
}

#[derive(Debug, Serialize)]
pub struct RectCount {
    #[serde(flatten)]
    pub rect: Rect,
    pub count: i64,
    /// Chain estimates inside the rectangle, over the configured k range.
    pub estimates_inside: usize,
}

pub const ROOTS_CSV_HEADER: &str = "k,estimate_re,estimate_im,refined_re,refined_im,residual,gap";

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:?}"),
        Some(x) if x.is_nan() => "NaN".into(),
        Some(x) if x > 0.0 => "inf".into(),
        Some(_) => "-inf".into(),
        None => "NaN".into(),
    }
}

fn roots_csv(rows: &[RootChainEstimate]) -> String {
    let mut s = String::from(ROOTS_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.k,
            num(Some(r.estimate.re)),
            num(Some(r.estimate.im)),
            num(r.refined.map(|z| z.re)),
            num(r.refined.map(|z| z.im)),
            num(r.residual),
            num(r.gap()),
        );
    }
    s
}

pub fn roots(cfg: &RunConfig) -> Result<Output, CliError> {
    let form = closed_loop(&cfg.system()?, &cfg.controller()?);
    let qp = quasi_polynomial(&form);
    let an = &cfg.analysis;
    let rows = if an.k_min > an.k_max || form.kind != FormKind::Neutral {
        Vec::new()
    } else {
        match chain_estimates(&qp, an.k_min..=an.k_max, an.refine) {
            Ok(v) => v,
            Err(SpectralError::NotNeutral) => Vec::new(),
            Err(e) => return Err(e.into()),
        }
    };
    let mut rects = Vec::with_capacity(an.rectangles.len());
    for &rect in &an.rectangles {
        rects.push(RectCount {
            rect,
            count: count_roots(&qp, rect)?,
            estimates_inside: rows.iter().filter(|r| rect.contains(r.estimate)).count(),
        });
    }
    let report = RootsReport {
        form_kind: form.kind,
        chain: chain_summary(&form),
        k_min: an.k_min,
        k_max: an.k_max,
        chain_rows: rows.len(),
        refined: rows.iter().filter(|r| r.refined.is_some()).count(),
        rectangles: rects,
    };
    Ok(Output {
        name: "roots.json",
        json: crate::output::to_json(&report)?,
        files: vec![("roots.csv", roots_csv(&rows).into_bytes())],
    })
}

// tune

#[derive(Debug, Serialize)]
pub struct TuneReport {
    pub objective: Objective,
    pub tau: f64,
    pub sigma_proxy_note: &'static str,
    pub best: Option<FeasiblePoint>,
    pub feasible: Vec<FeasiblePoint>,
    pub infeasible: Vec<InfeasiblePoint>,
}

pub fn tune_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let t = cfg
        .tune
        .as_ref()
        .ok_or_else(|| CliError::Config("the tune command needs a \"tune\" section".into()))?;
    let req = TuneRequest::new(
        cfg.system()?,
        cfg.tau(),
        t.theta_grid.clone(),
        t.k_grid.clone(),
        t.objective,
    )?;
    let res = tune(&req)?;
    let report = TuneReport {
        objective: res.objective,
        tau: cfg.tau(),
        sigma_proxy_note:
            "heuristic ranking by the negated condition-4 left side; not a decay rate",
        best: res.best,
        feasible: res.feasible,
        infeasible: res.infeasible,
    };
    Ok(Output {
        name: "tune.json",
        json: crate::output::to_json(&report)?,
        files: Vec::new(),
    })
}
