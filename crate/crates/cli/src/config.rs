//! Experiment configuration: a JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use ges_core::omega::PullbackSchedule;
use ges_core::{MetricKind, Schedule};
use ges_systems::nse::{BallConvention, ForcingProfile, NseConfig};
use ges_systems::registry::{self, ExperimentOptions};

use crate::exit::{CliError, CliResult};

/// Pullback start times `t - delta * ratio^i` (geometric) or
/// `t - delta * (i + 1)` (linear, when `ratio` is absent), `i < n`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub delta: Option<f64>,
    pub ratio: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NseFileConfig {
    pub kmax: Option<i32>,
    pub nu: Option<f64>,
    /// Inline forcing document or a path to one.
    pub forcing: Option<serde_json::Value>,
    pub convention: Option<BallConvention>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: Option<String>,
    pub metric: Option<MetricKind>,
    pub schedule: Option<ScheduleConfig>,
    pub eps_net: Option<f64>,
    pub tol: Option<f64>,
    pub seed_count: Option<usize>,
    pub symbols: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub nse: Option<NseFileConfig>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(CliError::usage(format!("{name} must be positive")))
            }
            _ => Ok(()),
        };
        positive("eps_net", self.eps_net)?;
        positive("tol", self.tol)?;
        if let Some(s) = &self.schedule {
            positive("schedule.delta", s.delta)?;
            if s.n.is_some_and(|n| n < 3) {
                return Err(CliError::usage("schedule.n must be at least 3"));
            }
            if s.ratio.is_some_and(|r| !(r > 1.0)) {
                return Err(CliError::usage("schedule.ratio must exceed 1"));
            }
        }
        if let Some(nse) = &self.nse {
            positive("nse.nu", nse.nu)?;
        }
        Ok(())
    }

    pub fn options(&self, seed: u64) -> CliResult<ExperimentOptions> {
        let mut opts = ExperimentOptions {
            rng_seed: seed,
            seed_count: self.seed_count,
            ..Default::default()
        };
        if let Some(n) = self.symbols {
            opts.symbols = n;
        }
        if let Some(nse) = &self.nse {
            apply_nse(&mut opts.nse, nse)?;
        }
        Ok(opts)
    }

    /// The configured schedule, or `default` with any given fields replaced.
    pub fn schedule(&self, default: &Schedule) -> CliResult<Schedule> {
        let Some(cfg) = &self.schedule else {
            return Ok(default.clone());
        };
        let (delta, ratio) = match default.mode() {
            ges_core::ScheduleMode::Linear { delta } => (delta, None),
            ges_core::ScheduleMode::Geometric { delta, ratio } => (delta, Some(ratio)),
            ges_core::ScheduleMode::Explicit => (1.0, None),
        };
        let delta = cfg.delta.unwrap_or(delta);
        let n = cfg.n.unwrap_or(default.len());
        let sched = match cfg.ratio.or(ratio) {
            Some(ratio) => PullbackSchedule::geometric(default.t(), delta, ratio, n),
            None => PullbackSchedule::linear(default.t(), delta, n),
        };
        sched.map_err(CliError::from)
    }
}

pub fn read_forcing(value: &serde_json::Value) -> CliResult<ForcingProfile> {
    let text = match value {
        serde_json::Value::String(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::format(format!("cannot read forcing {path}: {e}")))?,
        other => other.to_string(),
    };
    ForcingProfile::from_json_str(&text).map_err(|e| CliError::format(e.to_string()))
}

fn apply_nse(cfg: &mut NseConfig, file: &NseFileConfig) -> CliResult<()> {
    if let Some(k) = file.kmax {
        cfg.kmax = k;
    }
    if let Some(nu) = file.nu {
        cfg.nu = nu;
    }
    if let Some(c) = file.convention {
        cfg.convention = c;
    }
    if let Some(f) = &file.forcing {
        cfg.forcing = read_forcing(f)?;
    }
    Ok(())
}

pub fn check_system(id: &str) -> CliResult<()> {
    if registry::is_known(id) {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "unknown system `{id}` (known: {})",
            registry::SYSTEM_IDS.join(", ")
        )))
    }
}
