//! Experiment configuration shared by every subcommand.
//!
//! A config file is a JSON object whose keys mirror [`ExperimentConfig`];
//! every key is optional and unknown keys are rejected. Command-line flags
//! override file values.

use std::path::{Path, PathBuf};

use ldrl_core::gridworld::PRESETS;
use ldrl_core::utheta::{Schedule, ScheduleConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Bundled maze name or path to a maze file.
    pub maze: Option<String>,
    /// Path to a model JSON document.
    pub model: Option<PathBuf>,
    pub beta: Option<f64>,
    /// Inverse temperatures for `sweep` (and `simulate`, one row each).
    pub beta_list: Vec<f64>,
    pub horizon: usize,
    /// Horizons for `dp` and `compare`; defaults to `[horizon]`.
    pub horizons: Vec<usize>,
    pub slip: Option<f64>,
    pub cyclic: Option<bool>,
    /// Start state for model files (mazes use their `S` cell).
    pub start_state: Option<usize>,
    pub solver: SolverConfig,
    pub learner: LearnerConfig,
    pub simulate: SimulateConfig,
    pub seed: u64,
    pub replicas: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            maze: None,
            model: None,
            beta: None,
            beta_list: Vec::new(),
            horizon: 100,
            horizons: Vec::new(),
            slip: None,
            cyclic: None,
            start_state: None,
            solver: SolverConfig::default(),
            learner: LearnerConfig::default(),
            simulate: SimulateConfig::default(),
            seed: 0,
            replicas: 1,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Seeds a random positive start vector for the power iteration.
    pub start_seed: Option<u64>,
    pub gap_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
            start_seed: None,
            gap_max_iter: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Polynomial,
    StepDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub schedule: ScheduleKind,
    /// Initial `α` (constant and polynomial schedules).
    pub alpha: Option<f64>,
    /// Initial `α_θ` (constant and polynomial schedules).
    pub alpha_theta: Option<f64>,
    pub episodes: usize,
    /// History period in steps; defaults to 1% of the run.
    pub log_every: Option<u64>,
    pub eval_episodes: usize,
    pub renormalize_every: u64,
    /// Relative θ error reported as "converged" in the summary.
    pub target_rel_error: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleKind::Polynomial,
            alpha: None,
            alpha_theta: None,
            episodes: 100,
            log_every: None,
            eval_episodes: 0,
            renormalize_every: 1000,
            target_rel_error: 1e-2,
        }
    }
}

impl LearnerConfig {
    pub fn schedule_config(&self, total_steps: u64) -> CliResult<ScheduleConfig> {
        let mut cfg = match self.schedule {
            ScheduleKind::StepDecay => {
                if self.alpha.is_some() || self.alpha_theta.is_some() {
                    return Err(CliError::config(
                        "step_decay uses fixed initial rates; drop alpha/alpha_theta",
                    ));
                }
                ScheduleConfig::step_decay(total_steps)
            }
            ScheduleKind::Constant => ScheduleConfig {
                alpha: Schedule::Constant(self.alpha.unwrap_or(0.1)),
                alpha_theta: Schedule::Constant(self.alpha_theta.unwrap_or(0.01)),
                renormalize_every: 1000,
            },
            ScheduleKind::Polynomial => {
                let mut cfg = ScheduleConfig::default();
                if let Schedule::Polynomial { initial, .. } = &mut cfg.alpha {
                    *initial = self.alpha.unwrap_or(*initial);
                }
                if let Schedule::Polynomial { initial, .. } = &mut cfg.alpha_theta {
                    *initial = self.alpha_theta.unwrap_or(*initial);
                }
                cfg
            }
        };
        cfg.renormalize_every = self.renormalize_every;
        cfg.validate()
            .map_err(|e| CliError::config(format!("learner schedule: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Doob-transformed optimal chain.
    Driven,
    /// Uncontrolled prior chain.
    Prior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// Start state (reweighted by `u` for the driven chain).
    Start,
    /// Stationary distribution of the sampled chain.
    Steady,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub trajectories: usize,
    pub kernel: KernelKind,
    pub initial: InitialKind,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            trajectories: 1000,
            kernel: KernelKind::Driven,
            initial: InitialKind::Start,
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file. Relative `maze` and `model` paths are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(m) = &cfg.model {
            cfg.model = Some(base.join(m));
        }
        if let Some(m) = &cfg.maze {
            if !is_preset(m) {
                cfg.maze = Some(base.join(m).to_string_lossy().into_owned());
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        match (&self.maze, &self.model) {
            (None, None) => return Err(CliError::config("one of maze or model is required")),
            (Some(_), Some(_)) => return Err(CliError::config("maze and model are mutually exclusive")),
            (Some(m), None) if !is_preset(m) && !Path::new(m).is_file() => {
                return Err(CliError::config(format!(
                    "maze {m:?} is neither a bundled maze nor a file"
                )))
            }
            (None, Some(p)) if !p.is_file() => {
                return Err(CliError::config(format!("model file {} does not exist", p.display())))
            }
            _ => {}
        }
        let positive = |b: f64| b.is_finite() && b > 0.0;
        if self.beta.is_some_and(|b| !positive(b)) || self.beta_list.iter().any(|&b| !positive(b)) {
            return Err(CliError::config("beta must be finite and positive"));
        }
        if self.horizon == 0 || self.horizons.contains(&0) {
            return Err(CliError::config("horizon must be at least 1"));
        }
        if self.slip.is_some_and(|s| !(0.0..1.0).contains(&s)) {
            return Err(CliError::config("slip must lie in [0, 1)"));
        }
        if self.replicas == 0 {
            return Err(CliError::config("replicas must be at least 1"));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(CliError::config("solver needs tol > 0 and max_iter > 0"));
        }
        if self.simulate.trajectories == 0 {
            return Err(CliError::config("trajectories must be at least 1"));
        }
        if self.learner.episodes == 0 {
            return Err(CliError::config("episodes must be at least 1"));
        }
        Ok(())
    }

    /// Horizons for `dp`/`compare`, sorted and deduplicated.
    pub fn horizon_list(&self) -> Vec<usize> {
        let mut h = if self.horizons.is_empty() {
            vec![self.horizon]
        } else {
            self.horizons.clone()
        };
        h.sort_unstable();
        h.dedup();
        h
    }
}

pub fn is_preset(name: &str) -> bool {
    PRESETS.iter().any(|(n, _)| *n == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"beta": 1, "betta": 2}"#).unwrap_err();
        assert!(err.to_string().contains("betta"));
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"learner": {"alpah": 0.1}}"#).unwrap_err();
        assert!(err.to_string().contains("alpah"));
    }

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"maze": "frozen4", "learner": {"schedule": "step_decay"}}"#).unwrap();
        assert_eq!(cfg.horizon, 100);
        assert_eq!(cfg.learner.schedule, ScheduleKind::StepDecay);
        assert_eq!(cfg.learner.episodes, 100);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_values() {
        let base = ExperimentConfig {
            maze: Some("frozen4".into()),
            ..Default::default()
        };
        for bad in [
            ExperimentConfig {
                beta: Some(0.0),
                ..base.clone()
            },
            ExperimentConfig {
                horizon: 0,
                ..base.clone()
            },
            ExperimentConfig {
                slip: Some(1.0),
                ..base.clone()
            },
            ExperimentConfig {
                replicas: 0,
                ..base.clone()
            },
            ExperimentConfig {
                maze: None,
                ..base.clone()
            },
            ExperimentConfig {
                maze: Some("no-such-maze".into()),
                ..base.clone()
            },
        ] {
            assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn step_decay_rejects_rate_overrides() {
        let l = LearnerConfig {
            schedule: ScheduleKind::StepDecay,
            alpha: Some(0.2),
            ..Default::default()
        };
        assert!(l.schedule_config(1000).is_err());
        let l = LearnerConfig {
            alpha: Some(0.2),
            ..Default::default()
        };
        assert_eq!(l.schedule_config(1000).unwrap().alpha.rate(0), 0.2);
    }

    #[test]
    fn horizon_list_defaults_to_horizon() {
        let cfg = ExperimentConfig {
            horizon: 7,
            ..Default::default()
        };
        assert_eq!(cfg.horizon_list(), vec![7]);
        let cfg = ExperimentConfig {
            horizons: vec![50, 20, 50],
            ..Default::default()
        };
        assert_eq!(cfg.horizon_list(), vec![20, 50]);
    }
}
