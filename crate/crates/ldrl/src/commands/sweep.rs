use ldrl_core::driven::solve_driven;
use rayon::prelude::*;

use super::Spectral;
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{num, Artifacts};
use crate::problem::Problem;

/// Analytic bulk rates in original reward units.
#[derive(Debug, Clone, Copy)]
pub(super) struct Rates {
    pub beta: f64,
    pub energy_rate: f64,
    pub kl_rate: f64,
    pub theta: f64,
}

fn rates_at(cfg: &ExperimentConfig, problem: &Problem, beta: f64) -> CliResult<Rates> {
    let sp = Spectral::solve(&problem.with_beta(beta)?, cfg)?;
    let d = solve_driven(&sp.shifted, &sp.tilted, &sp.sol, &problem.prior_initial, cfg.horizon)?;
    Ok(Rates {
        beta,
        energy_rate: d.energy_rate - sp.shift(),
        kl_rate: d.kl_rate,
        theta: sp.theta(),
    })
}

/// Solves every β in parallel and writes `sweep.csv` in input order.
pub(super) fn write_rates(
    cfg: &ExperimentConfig,
    problem: &Problem,
    betas: &[f64],
    out: &mut Artifacts,
) -> CliResult<Vec<Rates>> {
    let rates = betas
        .par_iter()
        .map(|&b| rates_at(cfg, problem, b))
        .collect::<CliResult<Vec<_>>>()?;
    out.csv(
        "sweep.csv",
        &["beta", "energy_rate", "kl_rate", "theta"],
        rates
            .iter()
            .map(|r| vec![num(r.beta), num(r.energy_rate), num(r.kl_rate), num(r.theta)]),
    )?;
    Ok(rates)
}

pub(super) fn run(cfg: &ExperimentConfig, problem: &Problem, out: &mut Artifacts) -> CliResult<String> {
    let betas = if cfg.beta_list.is_empty() {
        vec![problem.model.beta()]
    } else {
        cfg.beta_list.clone()
    };
    let rates = write_rates(cfg, problem, &betas, out)?;
    let (first, last) = (rates[0], rates[rates.len() - 1]);
    Ok(format!(
        "{} temperature(s): energy rate {:.6} → {:.6}, kl rate {:.6} → {:.6}",
        rates.len(),
        first.energy_rate,
        last.energy_rate,
        first.kl_rate,
        last.kl_rate
    ))
}
