//! Model JSON documents.
//!
//! ```json
//! {
//!   "n_states": 2,
//!   "n_actions": 1,
//!   "policy": [1.0, 1.0],
//!   "dynamics": [[0, 0, 0.5], [0, 1, 0.5], [1, 0, 0.5], [1, 1, 0.5]],
//!   "rewards": [0.0, -1.0],
//!   "beta": 1.0
//! }
//! ```
//!
//! `policy` and `rewards` are pair tables indexed by `s * n_actions + a`.
//! Each `dynamics` triplet is `[pair, next_state, probability]`; missing
//! triplets are zero. `reward_shift` is optional (default 0) and records a
//! shift already applied to `rewards`.

use std::path::Path;

use ldrl_core::validate::{validate_model, Violation};
use ldrl_core::MdpModel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub n_states: usize,
    pub n_actions: usize,
    pub policy: Vec<f64>,
    pub dynamics: Vec<(usize, usize, f64)>,
    pub rewards: Vec<f64>,
    pub beta: f64,
    #[serde(default)]
    pub reward_shift: f64,
}

impl ModelDoc {
    pub fn from_model(model: &MdpModel) -> Self {
        let dynamics = model
            .dynamics()
            .iter()
            .enumerate()
            .flat_map(|(i, succ)| succ.iter().map(move |&(s, p)| (i, s, p)))
            .collect();
        Self {
            n_states: model.n_states(),
            n_actions: model.n_actions(),
            policy: model.policy().to_vec(),
            dynamics,
            rewards: model.rewards().to_vec(),
            beta: model.beta(),
            reward_shift: model.reward_shift(),
        }
    }

    pub fn to_model(&self) -> CliResult<MdpModel> {
        let n_pairs = self.n_states * self.n_actions;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_pairs];
        for &(i, s, p) in &self.dynamics {
            if i >= n_pairs || s >= self.n_states {
                return Err(CliError::config(format!("dynamics entry ({i}, {s}) out of range")));
            }
            if rows[i].iter().any(|e| e.0 == s) {
                return Err(CliError::config(format!("duplicate dynamics entry ({i}, {s})")));
            }
            rows[i].push((s, p));
        }
        rows.iter_mut().for_each(|r| r.sort_by_key(|e| e.0));
        let model = MdpModel::new(
            self.n_states,
            self.n_actions,
            self.policy.clone(),
            rows,
            self.rewards.clone(),
            self.beta,
        )
        .map_err(|e| CliError::config(format!("invalid model: {e}")))?;
        // Positive rewards are fine: the solvers shift them.
        let report = validate_model(&model);
        let mut blocking = report
            .violations
            .iter()
            .filter(|v| !matches!(v, Violation::PositiveReward { .. }));
        if let Some(first) = blocking.next() {
            return Err(CliError::config(format!("invalid model: {first}")));
        }
        Ok(model.with_reward_shift(self.reward_shift))
    }
}

pub fn read_model(path: &Path) -> CliResult<MdpModel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let doc: ModelDoc =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    doc.to_model()
}

pub fn write_model(path: &Path, model: &MdpModel) -> CliResult<()> {
    crate::output::write_json(path, &ModelDoc::from_model(model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ldrl_core::gridworld::{preset, to_mdp};

    #[test]
    fn maze_model_round_trips() {
        let m = to_mdp(&preset("frozen4").unwrap().with_slip(0.2).unwrap(), 3.0)
            .unwrap()
            .model;
        let doc = ModelDoc::from_model(&m);
        let text = serde_json::to_string(&doc).unwrap();
        let back: ModelDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_model().unwrap(), m);
    }

    #[test]
    fn bad_documents_are_config_errors() {
        let doc = ModelDoc {
            n_states: 1,
            n_actions: 1,
            policy: vec![1.0],
            dynamics: vec![(0, 0, 0.5)],
            rewards: vec![0.0],
            beta: 1.0,
            reward_shift: 0.0,
        };
        assert_eq!(doc.to_model().unwrap_err().exit_code(), 2);
        let dup = ModelDoc {
            dynamics: vec![(0, 0, 0.5), (0, 0, 0.5)],
            ..doc.clone()
        };
        assert!(dup.to_model().unwrap_err().to_string().contains("duplicate"));
        let oob = ModelDoc {
            dynamics: vec![(0, 3, 1.0)],
            ..doc
        };
        assert!(oob.to_model().is_err());
    }
}
