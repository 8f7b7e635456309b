use ldrl_core::dp::{compare_tables, solve_finite_horizon};
use ldrl_core::driven::value_functions;
use ldrl_core::mdp::shift_rewards;

use super::Spectral;
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{num, Artifacts};
use crate::problem::Problem;

/// `dp` writes the soft-Bellman tables; `compare` also scores the spectral
/// long-time values against them.
pub(super) fn run(cfg: &ExperimentConfig, problem: &Problem, out: &mut Artifacts, compare: bool) -> CliResult<String> {
    let horizons = cfg.horizon_list();
    let max = *horizons.last().expect("at least one horizon");
    let shifted = shift_rewards(&problem.model)?;
    let tables = solve_finite_horizon(&shifted, max, horizons.len() > 1)?;
    let k = shifted.n_actions();
    let shift = shifted.reward_shift();

    let mut rows = Vec::new();
    for &n in &horizons {
        let q = tables.q_at(n).expect("horizon was kept");
        let v = tables.v[n - tables.first_step].as_slice();
        for (i, &qi) in q.iter().enumerate() {
            let offset = n as f64 * shift;
            rows.push(vec![
                n.to_string(),
                (i / k).to_string(),
                (i % k).to_string(),
                num(qi + offset),
                num(v[i / k] + offset),
            ]);
        }
    }
    out.csv("dp_values.csv", &["step", "state", "action", "q", "v"], rows)?;
    if !compare {
        return Ok(format!(
            "soft Bellman tables for {} horizon(s) up to N = {max}",
            horizons.len()
        ));
    }

    let sp = Spectral::solve(&problem.model, cfg)?;
    let mut rows = Vec::new();
    let mut last = None;
    for &n in &horizons {
        let spectral_q = value_functions(&sp.shifted, &sp.sol, n)?.q;
        let c = compare_tables(tables.q_at(n).expect("horizon was kept"), &spectral_q)?;
        rows.push(vec![n.to_string(), num(c.rmsd), num(c.max_abs), num(c.pearson_r)]);
        last = Some((n, c));
    }
    out.csv("compare.csv", &["horizon", "rmsd", "max_abs", "pearson_r"], rows)?;
    let (n, c) = last.expect("at least one horizon");
    Ok(format!(
        "N = {n}: rmsd {:.3e}, max_abs {:.3e}, pearson_r {:.15}",
        c.rmsd, c.max_abs, c.pearson_r
    ))
}
