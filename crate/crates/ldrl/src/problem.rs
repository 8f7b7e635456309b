//! Resolves the configured maze or model file into an MDP.

use std::path::Path;

use ldrl_core::gridworld::{parse_maze, preset, to_mdp, GridMaze, MazeMdp};
use ldrl_core::MdpModel;

use crate::config::{is_preset, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::model_io::read_model;
use crate::output::num;

#[derive(Debug, Clone)]
pub struct Problem {
    /// Model in its original reward units, at the configured β.
    pub model: MdpModel,
    /// Prior initial pair distribution: the start state times the prior
    /// policy.
    pub prior_initial: Vec<f64>,
    /// Grid layout when the model comes from a maze.
    pub maze: Option<MazeMdp>,
    grid: Option<GridMaze>,
}

impl Problem {
    pub fn load(cfg: &ExperimentConfig) -> CliResult<Self> {
        if let Some(name) = &cfg.maze {
            let mut grid = if is_preset(name) {
                preset(name).map_err(|e| CliError::config(e.to_string()))?
            } else {
                let text = std::fs::read_to_string(name).map_err(|e| CliError::config(format!("{name}: {e}")))?;
                parse_maze(&text).map_err(|e| CliError::config(format!("{name}: {e}")))?
            };
            if let Some(s) = cfg.slip {
                grid = grid.with_slip(s).map_err(|e| CliError::config(e.to_string()))?;
            }
            if let Some(c) = cfg.cyclic {
                grid = grid.with_cyclic(c);
            }
            let beta = cfg.beta.or(cfg.beta_list.first().copied()).unwrap_or(1.0);
            return Self::from_grid(grid, beta, cfg.start_state);
        }
        let path = cfg
            .model
            .as_deref()
            .ok_or_else(|| CliError::config("no maze or model given"))?;
        Self::from_model_file(path, cfg)
    }

    fn from_grid(grid: GridMaze, beta: f64, start: Option<usize>) -> CliResult<Self> {
        if start.is_some() {
            return Err(CliError::config("start_state applies to model files; mazes start at S"));
        }
        let maze = to_mdp(&grid, beta)?;
        if !maze.primitivity.is_primitive() {
            eprintln!(
                "warning: maze chain is not primitive (irreducible: {}, period: {}); spectral commands will fail",
                maze.primitivity.irreducible, maze.primitivity.period
            );
        }
        Ok(Self {
            model: maze.model.clone(),
            prior_initial: maze.start_distribution(),
            maze: Some(maze),
            grid: Some(grid),
        })
    }

    fn from_model_file(path: &Path, cfg: &ExperimentConfig) -> CliResult<Self> {
        if cfg.slip.is_some() || cfg.cyclic.is_some() {
            return Err(CliError::config("slip and cyclic apply to mazes only"));
        }
        let mut model = read_model(path)?;
        if let Some(b) = cfg.beta.or(cfg.beta_list.first().copied()) {
            model = model.with_beta(b)?;
        }
        let start = cfg.start_state.unwrap_or(0);
        if start >= model.n_states() {
            return Err(CliError::config(format!(
                "start_state {start} out of range ({} states)",
                model.n_states()
            )));
        }
        Ok(Self {
            prior_initial: model.start_distribution(start),
            model,
            maze: None,
            grid: None,
        })
    }

    /// Same problem at another inverse temperature.
    pub fn with_beta(&self, beta: f64) -> CliResult<MdpModel> {
        Ok(self.model.with_beta(beta)?)
    }

    /// Rows of `states.csv` (`state,row,col,cell`) for mazes.
    pub fn state_rows(&self) -> Option<Vec<Vec<String>>> {
        let (maze, grid) = (self.maze.as_ref()?, self.grid.as_ref()?);
        Some(
            maze.cells
                .iter()
                .enumerate()
                .map(|(s, &(r, c))| {
                    vec![
                        s.to_string(),
                        r.to_string(),
                        c.to_string(),
                        grid.cell(r, c).to_char().to_string(),
                    ]
                })
                .collect(),
        )
    }

    /// `(state, action)` labels followed by `values[i]` for every pair.
    pub fn pair_rows<'a>(&'a self, columns: &'a [&'a [f64]]) -> impl Iterator<Item = Vec<String>> + 'a {
        let idx = self.model.index();
        (0..idx.len()).map(move |i| {
            let (s, a) = idx.decode(i);
            let mut row = vec![s.to_string(), a.to_string()];
            row.extend(columns.iter().map(|c| num(c[i])));
            row
        })
    }
}
