use ldrl_core::numeric::summarize;
use ldrl_core::utheta::{extract_policy, train_replica, ModelSampler, Sampler, TrainConfig};
use rayon::prelude::*;
use serde::Serialize;

use super::Spectral;
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{num, Artifacts};
use crate::problem::Problem;

#[derive(Serialize)]
struct ReplicaDoc {
    replica: usize,
    theta: f64,
    skipped_theta: u64,
    fallback_states: Vec<usize>,
}

#[derive(Serialize)]
struct LearnSummary {
    beta: f64,
    horizon: usize,
    episodes: usize,
    total_steps: u64,
    theta_reference: f64,
    theta_mean: f64,
    theta_std: f64,
    rel_error: f64,
    target_rel_error: f64,
    converged: bool,
    replicas: Vec<ReplicaDoc>,
}

/// Trains `cfg.replicas` u-θ learners in parallel and scores them against the
/// model-based θ. Missing the target is reported, not an error.
pub(super) fn run(cfg: &ExperimentConfig, problem: &Problem, out: &mut Artifacts) -> CliResult<String> {
    let sampler = ModelSampler::new(&problem.model, problem.prior_initial.clone())?;
    let shift = sampler.model().reward_shift();
    let total = (cfg.learner.episodes * cfg.horizon) as u64;
    let train = TrainConfig {
        schedule: cfg.learner.schedule_config(total)?,
        episodes: cfg.learner.episodes,
        horizon: cfg.horizon,
        seed: cfg.seed,
        replicas: cfg.replicas,
        log_every: cfg.learner.log_every.unwrap_or((total / 100).max(1)),
        eval_episodes: cfg.learner.eval_episodes,
    };
    let results = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| train_replica(&sampler, &train, r))
        .collect::<Result<Vec<_>, _>>()?;

    let reference = Spectral::solve(&problem.model, cfg)?.theta();
    let n_actions = sampler.n_actions();
    let prior = sampler.prior_policy();
    let mut mean_policy = vec![0.0; prior.len()];
    let mut replicas = Vec::new();
    let mut history = Vec::new();
    for res in &results {
        let ex = extract_policy(&res.state, prior, n_actions)?;
        for (m, p) in mean_policy.iter_mut().zip(&ex.policy) {
            *m += p / results.len() as f64;
        }
        for h in &res.history {
            history.push(vec![
                res.replica.to_string(),
                h.step.to_string(),
                num(h.theta - shift),
                num(h.mean_return + cfg.horizon as f64 * shift),
            ]);
        }
        replicas.push(ReplicaDoc {
            replica: res.replica,
            theta: res.state.theta() - shift,
            skipped_theta: res.state.skipped_theta,
            fallback_states: ex.fallback_states,
        });
    }
    out.csv(
        "learn_history.csv",
        &["replica", "step", "theta_est", "mean_return"],
        history,
    )?;
    out.csv(
        "policy.csv",
        &["state", "action", "probability", "prior"],
        problem.pair_rows(&[&mean_policy, prior]),
    )?;

    let thetas: Vec<f64> = replicas.iter().map(|r| r.theta).collect();
    let s = summarize(&thetas);
    let rel_error = (s.mean - reference).abs() / reference.abs();
    let converged = rel_error <= cfg.learner.target_rel_error;
    out.json(
        "learn_summary.json",
        &LearnSummary {
            beta: problem.model.beta(),
            horizon: cfg.horizon,
            episodes: cfg.learner.episodes,
            total_steps: total,
            theta_reference: reference,
            theta_mean: s.mean,
            theta_std: s.std_dev,
            rel_error,
            target_rel_error: cfg.learner.target_rel_error,
            converged,
            replicas,
        },
    )?;
    Ok(format!(
        "{} replica(s), {total} steps each: theta {:.6} ± {:.2e} vs model-based {reference:.6} (relative error {rel_error:.2e}, target {} {})",
        cfg.replicas,
        s.mean,
        s.std_dev,
        cfg.learner.target_rel_error,
        if converged { "met" } else { "not met" },
    ))
}
