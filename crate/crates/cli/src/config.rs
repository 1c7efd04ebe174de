//! Run configuration. Every section rejects unknown keys.

use std::fs;
use std::path::{Path, PathBuf};

use ipstab::model::{HistoryKind, HistorySpec, IpController, LinearSystem};
use ipstab::simulate::Reference;
use ipstab::spectral::Rect;
use ipstab::tuner::Objective;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub history: Option<HistoryConfig>,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub tune: Option<TuneConfig>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    /// Leading coefficient first.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub order: Option<OrderConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderConfig {
    pub a: usize,
    pub b: usize,
}

/// `alpha` and `k` may be omitted for `tune`, which picks them itself.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub k: Option<f64>,
    pub tau: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryConfig {
    pub output: HistoryKind,
    #[serde(default = "zero_history")]
    pub control: HistoryKind,
}

fn zero_history() -> HistoryKind {
    HistoryKind::zero()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorChoice {
    /// Pick from the closed-loop classification.
    #[default]
    Auto,
    Loop,
    Neutral,
    Advanced,
    Sampled,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Defaults to `tau / 64`.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub integrator: IntegratorChoice,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Fraction of the run ignored by the decay fit.
    #[serde(default)]
    pub skip: f64,
}

fn default_horizon() -> f64 {
    10.0
}

fn default_substeps() -> usize {
    20
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon: default_horizon(),
            step: None,
            integrator: IntegratorChoice::Auto,
            reference: Reference::default(),
            substeps: default_substeps(),
            skip: 0.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_k_min")]
    pub k_min: i64,
    #[serde(default = "default_k_max")]
    pub k_max: i64,
    #[serde(default = "yes")]
    pub refine: bool,
    #[serde(default)]
    pub rectangles: Vec<Rect>,
}

fn default_k_min() -> i64 {
    -10
}

fn default_k_max() -> i64 {
    10
}

fn yes() -> bool {
    true
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            k_min: default_k_min(),
            k_max: default_k_max(),
            refine: true,
            rectangles: Vec::new(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub theta_grid: Vec<f64>,
    pub k_grid: Vec<f64>,
    #[serde(default)]
    pub objective: Objective,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Checks everything that does not depend on the subcommand.
    fn check(&self) -> Result<(), CliError> {
        self.system()?;
        if let Some(o) = &self.plant.order {
            let (a, b) = (self.plant.alpha.len() - 1, self.plant.beta.len() - 1);
            if (o.a, o.b) != (a, b) {
                return Err(CliError::Config(format!(
                    "plant.order (a={}, b={}) disagrees with coefficient lists (a={a}, b={b})",
                    o.a, o.b
                )));
            }
        }
        if !(self.controller.tau > 0.0 && self.controller.tau.is_finite()) {
            return Err(CliError::Config(format!(
                "controller.tau must be positive, got {}",
                self.controller.tau
            )));
        }
        self.history()?;
        let sim = &self.simulation;
        if !(sim.horizon > 0.0 && sim.horizon.is_finite()) {
            return Err(CliError::Config(format!(
                "simulation.horizon must be positive, got {}",
                sim.horizon
            )));
        }
        if !(0.0..1.0).contains(&sim.skip) {
            return Err(CliError::Config(format!(
                "simulation.skip must lie in [0, 1), got {}",
                sim.skip
            )));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<LinearSystem, CliError> {
        LinearSystem::new(self.plant.alpha.clone(), self.plant.beta.clone())
            .map_err(|e| CliError::Config(format!("plant: {e}")))
    }

    pub fn tau(&self) -> f64 {
        self.controller.tau
    }

    /// Full controller; `alpha` and `k` must both be present.
    pub fn controller(&self) -> Result<IpController, CliError> {
        let c = &self.controller;
        let (alpha, k) = match (c.alpha, c.k) {
            (Some(a), Some(k)) => (a, k),
            _ => {
                return Err(CliError::Config(
                    "controller.alpha and controller.k are required for this command".into(),
                ))
            }
        };
        IpController::new(alpha, k, c.tau).map_err(|e| CliError::Config(format!("controller: {e}")))
    }

    pub fn history(&self) -> Result<HistorySpec, CliError> {
        let tau = self.tau();
        let spec = match &self.history {
            Some(h) => HistorySpec::new(tau, h.output.clone(), h.control.clone()),
            None => HistorySpec::default_for(tau),
        };
        spec.map_err(|e| CliError::Config(format!("history: {e}")))
    }
}
