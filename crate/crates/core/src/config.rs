//! Run configuration, read from TOML. Every field has a default, so a file
//! containing only `[scenario]` with `kind = "two-body-head-on"` is a
//! complete configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checks::Tolerances;
use crate::error::{Error, Result};
use crate::integrate::{geometric_grid, StepperConfig};
use crate::scenarios::ScenarioSpec;

pub const DEFAULT_PER_DECADE: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Spacing {
    /// Samples at `10^(k / per_decade)` for `t >= 1`.
    Geometric { per_decade: u32 },
    /// Samples every `dt` from the start time.
    Fixed { dt: f64 },
}

impl Default for Spacing {
    fn default() -> Self {
        Spacing::Geometric {
            per_decade: DEFAULT_PER_DECADE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Output files are `<prefix>.traj.csv`, `<prefix>.diag.csv` and
    /// `<prefix>.summary.json`.
    pub prefix: String,
    pub spacing: Spacing,
    /// Significant decimal digits in the CSV files, 6 to 17.
    pub precision: u32,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            prefix: "repulse".into(),
            spacing: Spacing::default(),
            precision: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    pub enabled: bool,
    /// Names of individual checks to leave out.
    pub skip: Vec<String>,
    pub tolerances: Tolerances,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            skip: Vec::new(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub stepper: StepperConfig,
    pub t_end: f64,
    pub output: OutputConfig,
    pub checks: ChecksConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSpec::default(),
            stepper: StepperConfig::default(),
            t_end: 1000.0,
            output: OutputConfig::default(),
            checks: ChecksConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.stepper.validate()?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidConfig(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.checks.enabled && self.t_end <= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "t_end = {} must exceed 1 when checks are enabled",
                self.t_end
            )));
        }
        if !(6..=17).contains(&self.output.precision) {
            return Err(Error::InvalidConfig(format!(
                "precision must be between 6 and 17, got {}",
                self.output.precision
            )));
        }
        match self.output.spacing {
            Spacing::Geometric { per_decade } if per_decade == 0 => {
                Err(Error::InvalidConfig("per_decade must be at least 1".into()))
            }
            Spacing::Fixed { dt } if !(dt.is_finite() && dt > 0.0) => {
                Err(Error::InvalidConfig(format!("output dt must be positive, got {dt}")))
            }
            _ => Ok(()),
        }
    }

    pub fn per_decade(&self) -> Option<u32> {
        match self.output.spacing {
            Spacing::Geometric { per_decade } => Some(per_decade),
            Spacing::Fixed { .. } => None,
        }
    }

    /// Output times after `t0`: the configured spacing plus the reference
    /// times `T/20, T/10, T/4, T/2` used by the tail and rate checks.
    pub fn output_times(&self, t0: f64) -> Vec<f64> {
        output_times(t0, self.t_end, self.output.spacing)
    }
}

pub fn output_times(t0: f64, t_end: f64, spacing: Spacing) -> Vec<f64> {
    let mut times: Vec<f64> = match spacing {
        Spacing::Geometric { per_decade } if t_end > 1.0 => geometric_grid(1.0, t_end, per_decade),
        Spacing::Geometric { .. } => Vec::new(),
        Spacing::Fixed { dt } => {
            let count = ((t_end - t0) / dt * (1.0 + 1e-12)).floor() as u64;
            (1..=count).map(|k| t0 + k as f64 * dt).collect()
        }
    };
    times.extend([t_end / 20.0, t_end / 10.0, t_end / 4.0, t_end / 2.0]);
    let tol = 1e-9 * t_end;
    times.retain(|&t| t > t0 + tol && t <= t_end);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= tol);
    times
}
