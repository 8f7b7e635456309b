mod dp;
mod learn;
mod simulate;
mod solve;
mod sweep;

use ldrl_core::mdp::tilted_from_model;
use ldrl_core::spectral::dominant_triplet;
use ldrl_core::{MdpModel, PowerConfig, SpectralSolution, TiltedMatrix};

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::Artifacts;
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Dp,
    Compare,
    Learn,
    Simulate,
    Sweep,
}

/// Result of one command: the files written and a one-paragraph summary.
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub summary: String,
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    let problem = Problem::load(cfg)?;
    let mut out = Artifacts::new(&cfg.out)?;
    if let Some(rows) = problem.state_rows() {
        out.csv("states.csv", &["state", "row", "col", "cell"], rows)?;
    }
    let summary = match command {
        Command::Solve => solve::run(cfg, &problem, &mut out)?,
        Command::Dp => dp::run(cfg, &problem, &mut out, false)?,
        Command::Compare => dp::run(cfg, &problem, &mut out, true)?,
        Command::Learn => learn::run(cfg, &problem, &mut out)?,
        Command::Simulate => simulate::run(cfg, &problem, &mut out)?,
        Command::Sweep => sweep::run(cfg, &problem, &mut out)?,
    };
    Ok(Outcome {
        artifacts: out,
        summary,
    })
}

/// Shifted model, its tilted matrix and the Perron triplet.
pub(crate) struct Spectral {
    pub shifted: MdpModel,
    pub tilted: TiltedMatrix,
    pub sol: SpectralSolution,
}

impl Spectral {
    pub fn solve(model: &MdpModel, cfg: &ExperimentConfig) -> CliResult<Self> {
        let (shifted, tilted) = tilted_from_model(model)?;
        let power = PowerConfig {
            tol: cfg.solver.tol,
            max_iter: cfg.solver.max_iter,
            seed: cfg.solver.start_seed,
        };
        let sol = dominant_triplet(&tilted, &power)?;
        Ok(Self { shifted, tilted, sol })
    }

    /// Reward shift removed at load time; add it back to report rewards in
    /// original units.
    pub fn shift(&self) -> f64 {
        self.shifted.reward_shift()
    }

    /// θ in original reward units.
    pub fn theta(&self) -> f64 {
        self.sol.theta - self.shift()
    }
}
