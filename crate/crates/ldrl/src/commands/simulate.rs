use ldrl_core::driven::{driven_matrix, optimal_initial_distribution, steady_state_distribution};
use ldrl_core::numeric::kl_divergence;
use ldrl_core::sim::{empirical_energy_and_kl, exact_marginals, occupation_frequencies, sample_trajectory};
use ldrl_core::stream_rng;
use rayon::prelude::*;

use super::{sweep, Spectral};
use crate::config::{ExperimentConfig, InitialKind, KernelKind};
use crate::error::CliResult;
use crate::output::{num, Artifacts};
use crate::problem::Problem;

/// Exact marginals and their distance to the steady state, Monte-Carlo
/// occupation and rates, and the analytic rate table.
pub(super) fn run(cfg: &ExperimentConfig, problem: &Problem, out: &mut Artifacts) -> CliResult<String> {
    let sp = Spectral::solve(&problem.model, cfg)?;
    let n = cfg.horizon;
    let steady = steady_state_distribution(&sp.sol);

    let marginals = exact_marginals(&sp.tilted, &problem.prior_initial, n)?;
    let mut rows = Vec::new();
    let mut kl_rows = Vec::new();
    for (t, m) in marginals.iter().enumerate() {
        rows.extend(problem.pair_rows(&[m]).map(|mut r| {
            r.insert(0, (t + 1).to_string());
            r
        }));
        kl_rows.push(vec![(t + 1).to_string(), num(kl_divergence(m, &steady))]);
    }
    out.csv("marginals.csv", &["t", "state", "action", "probability"], rows)?;
    out.csv("marginal_kl.csv", &["t", "kl"], kl_rows)?;

    let driven = driven_matrix(&sp.tilted, &sp.sol)?.matrix;
    let prior = sp.tilted.prior();
    let (kernel, initial) = match (cfg.simulate.kernel, cfg.simulate.initial) {
        (KernelKind::Driven, InitialKind::Start) => {
            (&driven, optimal_initial_distribution(&problem.prior_initial, &sp.sol)?)
        }
        (KernelKind::Driven, InitialKind::Steady) => (&driven, steady.clone()),
        (KernelKind::Prior, InitialKind::Start) => (prior, problem.prior_initial.clone()),
        (KernelKind::Prior, InitialKind::Steady) => (
            prior,
            prior.stationary_distribution(cfg.solver.tol, cfg.solver.max_iter)?,
        ),
    };
    let rewards = problem.model.rewards();
    let batch = (0..cfg.simulate.trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(cfg.seed, k as u64);
            sample_trajectory(kernel, &initial, rewards, n, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let occupation = occupation_frequencies(&batch, problem.model.n_pairs(), None);
    out.csv(
        "occupation.csv",
        &["state", "action", "frequency"],
        problem.pair_rows(&[&occupation]),
    )?;
    let rates = empirical_energy_and_kl(&batch, prior, kernel)?;
    let kernel_name = match cfg.simulate.kernel {
        KernelKind::Driven => "driven",
        KernelKind::Prior => "prior",
    };
    out.csv(
        "empirical.csv",
        &[
            "kernel",
            "trajectories",
            "horizon",
            "energy_mean",
            "energy_se",
            "kl_mean",
            "kl_se",
        ],
        [vec![
            kernel_name.to_string(),
            batch.len().to_string(),
            n.to_string(),
            num(rates.energy.mean),
            num(rates.energy.std_err),
            num(rates.kl.mean),
            num(rates.kl.std_err),
        ]],
    )?;

    let betas = if cfg.beta_list.is_empty() {
        vec![problem.model.beta()]
    } else {
        cfg.beta_list.clone()
    };
    sweep::write_rates(cfg, problem, &betas, out)?;
    Ok(format!(
        "{} {kernel_name} trajectories of length {n}: energy {:.6} ± {:.1e}, kl {:.6} ± {:.1e}; KL(t=1) = {:.4e}, KL(t=N) = {:.4e}",
        batch.len(),
        rates.energy.mean,
        rates.energy.std_err,
        rates.kl.mean,
        rates.kl.std_err,
        kl_divergence(&marginals[0], &steady),
        kl_divergence(&marginals[n - 1], &steady),
    ))
}
