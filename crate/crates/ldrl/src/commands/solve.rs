use ldrl_core::driven::solve_driven;
use ldrl_core::spectral::spectral_gap;
use serde::Serialize;

use super::Spectral;
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::model_io::ModelDoc;
use crate::output::Artifacts;
use crate::problem::Problem;

#[derive(Serialize)]
struct GapDoc {
    subdominant_ratio: f64,
    xi_gap: f64,
    n_star: Option<usize>,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct SpectralDoc {
    beta: f64,
    /// Perron root of the shifted tilted matrix.
    rho: f64,
    log_rho: f64,
    /// Free-energy rate in original reward units.
    theta: f64,
    reward_shift: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    log_u: Vec<f64>,
    log_v: Vec<f64>,
    residual: f64,
    iterations: usize,
    gap: GapDoc,
}

#[derive(Serialize)]
struct DrivenDoc {
    beta: f64,
    horizon: usize,
    theta: f64,
    energy_rate: f64,
    kl_rate: f64,
    /// `theta - energy_rate - kl_rate / beta`.
    identity_error: f64,
    policy: Vec<f64>,
    /// `[pair, next_state, probability]` triplets.
    dynamics: Vec<(usize, usize, f64)>,
    initial: Vec<f64>,
    steady_state: Vec<f64>,
    driven_max_correction: f64,
    dynamics_max_correction: f64,
}

pub(super) fn run(cfg: &ExperimentConfig, problem: &Problem, out: &mut Artifacts) -> CliResult<String> {
    let sp = Spectral::solve(&problem.model, cfg)?;
    let gap = spectral_gap(&sp.tilted, &sp.sol, cfg.solver.gap_max_iter, cfg.seed)?;
    let d = solve_driven(&sp.shifted, &sp.tilted, &sp.sol, &problem.prior_initial, cfg.horizon)?;
    let beta = sp.shifted.beta();
    let theta = sp.theta();
    let energy_rate = d.energy_rate - sp.shift();

    out.json("model.json", &ModelDoc::from_model(&problem.model))?;
    out.json(
        "spectral.json",
        &SpectralDoc {
            beta,
            rho: sp.sol.rho,
            log_rho: sp.sol.log_rho,
            theta,
            reward_shift: sp.shift(),
            u: sp.sol.u(),
            v: sp.sol.v(),
            log_u: sp.sol.log_u.clone(),
            log_v: sp.sol.log_v.clone(),
            residual: sp.sol.residual,
            iterations: sp.sol.iterations,
            gap: GapDoc {
                subdominant_ratio: gap.subdominant_ratio,
                xi_gap: gap.xi_gap,
                n_star: gap.n_star,
                iterations: gap.iterations,
                converged: gap.converged,
            },
        },
    )?;
    out.json(
        "driven.json",
        &DrivenDoc {
            beta,
            horizon: cfg.horizon,
            theta,
            energy_rate,
            kl_rate: d.kl_rate,
            identity_error: theta - energy_rate - d.kl_rate / beta,
            policy: d.policy.clone(),
            dynamics: d
                .dynamics
                .table
                .iter()
                .enumerate()
                .flat_map(|(i, succ)| succ.iter().map(move |&(s, p)| (i, s, p)))
                .collect(),
            initial: d.initial.clone(),
            steady_state: d.steady_state.clone(),
            driven_max_correction: d.driven.max_correction,
            dynamics_max_correction: d.dynamics.max_correction,
        },
    )?;

    let prior = problem.model.policy();
    out.csv(
        "policy.csv",
        &["state", "action", "probability", "prior"],
        problem.pair_rows(&[&d.policy, prior]),
    )?;
    out.csv(
        "steady_state.csv",
        &["state", "action", "probability"],
        problem.pair_rows(&[&d.steady_state]),
    )?;
    let (q, v) = d.values.unshifted();
    let v_pairs: Vec<f64> = (0..q.len()).map(|i| v[i / problem.model.n_actions()]).collect();
    out.csv(
        "values.csv",
        &["state", "action", "q", "v"],
        problem.pair_rows(&[&q, &v_pairs]),
    )?;

    Ok(format!(
        "beta {beta}: theta = {theta:.12}, rho = {:.12}, {} iterations (residual {:.1e}); n_star = {}",
        sp.sol.rho,
        sp.sol.iterations,
        sp.sol.residual,
        gap.n_star.map_or("unresolved".into(), |n| n.to_string()),
    ))
}
