//! Run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use gaussfb::scenarios::{ScenarioSpec, Strategy, SweepParameter};
use gaussfb::trajectories::TrajectoryConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    /// Explicit grid values, in output order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    /// Evenly spaced grid, expanded into `grid` on resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<GridRange>,
    /// Strategies run at every grid point; defaults to the scenario's own.
    #[serde(default)]
    pub strategies: Vec<Strategy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    /// Number of points including both ends.
    pub steps: usize,
}

impl GridRange {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::Config("range ends must be finite".into()));
        }
        Ok(match self.steps {
            0 => Vec::new(),
            1 => vec![self.start],
            k => {
                let h = (self.stop - self.start) / (k - 1) as f64;
                (0..k).map(|i| if i + 1 == k { self.stop } else { self.start + h * i as f64 }).collect()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// The gain that pins the unconditional state to the conditional one,
    /// multiplied by `feedback_scale`.
    #[default]
    Optimal,
    /// Monitoring only.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "one_usize")]
    pub record_stride: usize,
    #[serde(default)]
    pub record_currents: bool,
    #[serde(default)]
    pub feedback: FeedbackMode,
    #[serde(default = "one")]
    pub feedback_scale: f64,
    /// Start of the averaging window; defaults to `10 / α₁`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    /// Where to write the recorded means (and currents) as CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_out: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl SimulateConfig {
    pub fn trajectory_config(&self) -> Result<TrajectoryConfig, CliError> {
        let seed = self.seed.ok_or_else(|| CliError::Config("simulate.seed is required (or pass --seed)".into()))?;
        let cfg = TrajectoryConfig {
            dt: self.dt,
            t_final: self.t_final,
            n_traj: self.n_traj,
            seed,
            record_stride: self.record_stride,
            record_currents: self.record_currents,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies the seed override, fills defaults and checks every range
    /// that can be checked without solving anything.
    pub fn resolve(mut self, seed: Option<u64>) -> Result<Self, CliError> {
        self.scenario = self.scenario.resolve()?;
        if let Some(sw) = self.sweep.as_mut() {
            let grid = match (sw.grid.take(), sw.range.take()) {
                (Some(_), Some(_)) => return Err(CliError::Config("sweep takes either grid or range, not both".into())),
                (Some(g), None) => g,
                (None, Some(r)) => r.values()?,
                (None, None) => return Err(CliError::Config("sweep needs grid or range".into())),
            };
            if grid.is_empty() {
                return Err(CliError::Config("sweep grid is empty".into()));
            }
            if let Some(bad) = grid.iter().find(|v| !v.is_finite()) {
                return Err(CliError::Config(format!("sweep grid contains {bad}")));
            }
            sw.grid = Some(grid);
            if sw.strategies.is_empty() {
                sw.strategies.push(self.scenario.strategy);
            }
        }
        if let Some(sim) = self.simulate.as_mut() {
            if seed.is_some() {
                sim.seed = seed;
            }
            sim.trajectory_config()?;
            if !sim.feedback_scale.is_finite() {
                return Err(CliError::Config("feedback_scale must be finite".into()));
            }
            if let Some(b) = sim.burn_in {
                if !(b.is_finite() && b >= 0.0 && b <= sim.t_final) {
                    return Err(CliError::Config(format!("burn_in must lie in [0, t_final], got {b}")));
                }
            }
        }
        Ok(self)
    }

    pub fn sweep(&self) -> Result<&SweepConfig, CliError> {
        self.sweep.as_ref().ok_or_else(|| CliError::Config("missing [sweep] section".into()))
    }

    pub fn simulate(&self) -> Result<&SimulateConfig, CliError> {
        self.simulate.as_ref().ok_or_else(|| CliError::Config("missing [simulate] section".into()))
    }
}
