#![allow(dead_code)]

use ldrl_core::gridworld::{preset, to_mdp, MazeMdp, PRESETS};
use ldrl_core::mdp::tilted_from_model;
use ldrl_core::spectral::dominant_triplet;
use ldrl_core::{stream_rng, MdpModel, PowerConfig, SpectralSolution, TiltedMatrix};
use rand::Rng;

pub const E: f64 = 0.36787944117144233;

/// Two states, one action, uniform kernel, `r = (0, -1)`.
pub fn two_state(beta: f64) -> MdpModel {
    MdpModel::new(
        2,
        1,
        vec![1.0, 1.0],
        vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 0.5), (1, 0.5)]],
        vec![0.0, -1.0],
        beta,
    )
    .unwrap()
}

pub fn maze(name: &str, beta: f64) -> MazeMdp {
    to_mdp(&preset(name).unwrap(), beta).unwrap()
}

pub fn maze_with_slip(name: &str, beta: f64, slip: f64) -> MazeMdp {
    to_mdp(&preset(name).unwrap().with_slip(slip).unwrap(), beta).unwrap()
}

pub fn all_mazes(beta: f64) -> Vec<(String, MazeMdp)> {
    let mut out: Vec<(String, MazeMdp)> = PRESETS
        .iter()
        .map(|(name, _)| (name.to_string(), maze(name, beta)))
        .collect();
    out.push(("maze9 slip 0.2".into(), maze_with_slip("maze9", beta, 0.2)));
    out.push(("ring6 slip 0.1".into(), maze_with_slip("ring6", beta, 0.1)));
    out
}

/// Random MDP with at most 64 pairs. Every transition probability is
/// positive with probability 0.6 but each row keeps at least its "own"
/// successor `(s + a + 1) mod n` and a self-loop, so the pair chain is
/// primitive.
pub fn random_mdp(seed: u64) -> MdpModel {
    let mut rng = stream_rng(seed, 99);
    let n_actions = rng.random_range(1..=4usize);
    let n_states = rng.random_range(2..=(64 / n_actions).min(16));
    let mut policy = Vec::new();
    for _ in 0..n_states {
        let w: Vec<f64> = (0..n_actions).map(|_| 0.05 + rng.random::<f64>()).collect();
        let z: f64 = w.iter().sum();
        policy.extend(w.iter().map(|x| x / z));
    }
    let mut dynamics = Vec::new();
    for s in 0..n_states {
        for a in 0..n_actions {
            let mut row = Vec::new();
            for t in 0..n_states {
                let keep = t == s || t == (s + a + 1) % n_states || rng.random::<f64>() < 0.6;
                if keep {
                    row.push((t, 0.05 + rng.random::<f64>()));
                }
            }
            let z: f64 = row.iter().map(|x| x.1).sum();
            dynamics.push(row.into_iter().map(|(t, p)| (t, p / z)).collect());
        }
    }
    let rewards = (0..n_states * n_actions).map(|_| -2.0 * rng.random::<f64>()).collect();
    let beta = 0.1 + 4.9 * rng.random::<f64>();
    MdpModel::new(n_states, n_actions, policy, dynamics, rewards, beta).unwrap()
}

pub fn solve(model: &MdpModel) -> (MdpModel, TiltedMatrix, SpectralSolution) {
    let (shifted, tilted) = tilted_from_model(model).unwrap();
    let sol = dominant_triplet(&tilted, &PowerConfig::default()).unwrap();
    (shifted, tilted, sol)
}
