//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line with the
//! measured values; the process exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p ldrl-core --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use common::*;
use ldrl_core::dp::{compare_tables, solve_finite_horizon};
use ldrl_core::driven::{
    driven_matrix, kl_rate, mean_energy_per_step, optimal_dynamics, optimal_policy, solve_driven,
    steady_state_distribution, value_functions,
};
use ldrl_core::mdp::build_extended_matrix;
use ldrl_core::numeric::{kl_divergence, summarize};
use ldrl_core::sim::{bulk_window, empirical_energy_and_kl, exact_marginals, sample_trajectories};
use ldrl_core::spectral::spectral_gap;
use ldrl_core::utheta::{
    expected_drift, extract_policy, train, LearningState, ModelSampler, ScheduleConfig, TrainConfig,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn spectral_dp_agreement() -> Verdict {
    let start = Instant::now();
    let mdp = maze("empty10", 10.0);
    let (m, _, sol) = solve(&mdp.model);
    let horizons = [20usize, 50, 100, 150, 200, 290];
    let mut rmsd = Vec::new();
    let mut last = None;
    for &n in &horizons {
        let dp = solve_finite_horizon(&m, n, false).unwrap();
        let q = value_functions(&m, &sol, n).unwrap().q;
        let c = compare_tables(dp.last_q(), &q).unwrap();
        rmsd.push(c.rmsd);
        last = Some(c);
    }
    let last = last.unwrap();
    let elapsed = start.elapsed();
    let monotone = rmsd.windows(2).all(|w| w[1] < w[0]);
    let pass = monotone && last.rmsd < 1e-8 && last.pearson_r >= 1.0 - 1e-10 && within(elapsed, 10.0);
    verdict(
        pass,
        format!(
            "rmsd {:?}, pearson_r(290) = {:.15}, {:.2?}",
            rmsd.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>(),
            last.pearson_r,
            elapsed
        ),
    )
}

fn two_state_oracle() -> Verdict {
    let start = Instant::now();
    let model = two_state(1.0);
    let rho = (1.0 + E) / 2.0;
    let theta = -rho.ln();
    let p0 = 1.0 / (1.0 + E);
    let mut worst: f64 = 0.0;
    let mut check = |got: f64, want: f64| worst = worst.max((got - want).abs());

    let (m, t, sol) = solve(&model);
    check(sol.rho, rho);
    check(sol.theta, theta);
    let (u, v) = (sol.u(), sol.v());
    check(u[0], 1.0 / rho);
    check(u[1], E / rho);
    check(u[0] * v[0] + u[1] * v[1], 1.0);

    let d = driven_matrix(&t, &sol).unwrap();
    for i in 0..2 {
        check(d.matrix.get(0, i), p0);
        check(d.matrix.get(1, i), 1.0 - p0);
    }
    let vf = value_functions(&m, &sol, 2).unwrap();
    check(vf.q[0], -theta);
    check(vf.q[1], -theta - 1.0);

    let dp = solve_finite_horizon(&m, 2, false).unwrap();
    check(dp.last_q()[0], -theta);
    check(dp.last_q()[1], -theta - 1.0);

    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-10 && within(elapsed, 1.0),
        format!("max deviation {worst:.2e}, {elapsed:.2?}"),
    )
}

fn bulk_marginals() -> Verdict {
    let start = Instant::now();
    let horizon = 250;
    let mdp = maze("frozen4", 2.0);
    let (_, t, sol) = solve(&mdp.model);
    let gap = spectral_gap(&t, &sol, 1_000_000, 0).unwrap();
    let steady = steady_state_distribution(&sol);
    let marginals = exact_marginals(&t, &mdp.start_distribution(), horizon).unwrap();
    let kl: Vec<f64> = marginals.iter().map(|p| kl_divergence(p, &steady)).collect();
    let elapsed = start.elapsed();
    let Some(window) = bulk_window(gap.n_star, horizon) else {
        return verdict(false, format!("empty bulk window, n_star {:?}", gap.n_star));
    };
    let bulk_max = window.clone().map(|t| kl[t - 1]).fold(0.0, f64::max);
    let (first, last) = (kl[0], kl[horizon - 1]);
    verdict(
        bulk_max <= 1e-6 && first > 1e-3 && last > 1e-3 && within(elapsed, 30.0),
        format!(
            "n_star {}, bulk {:?}: max KL {bulk_max:.2e}; KL(t=1) {first:.3}, KL(t=N) {last:.3}, {elapsed:.2?}",
            gap.n_star.unwrap(),
            window
        ),
    )
}

fn free_energy_identity() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut models: Vec<_> = Vec::new();
    for beta in [0.5, 2.0, 10.0] {
        models.extend(
            all_mazes(beta)
                .into_iter()
                .map(|(_, m)| (m.model.clone(), m.start_distribution())),
        );
    }
    for seed in 0..30 {
        let m = random_mdp(seed);
        let init = vec![1.0 / m.n_pairs() as f64; m.n_pairs()];
        models.push((m, init));
    }
    for (model, init) in &models {
        let (m, t, sol) = solve(model);
        let d = solve_driven(&m, &t, &sol, init, 1).unwrap();
        worst = worst.max((sol.theta - (d.energy_rate + d.kl_rate / m.beta())).abs());
        count += 1;
    }
    verdict(
        worst <= 1e-8,
        format!("{count} models, max |θ - Ē - KL/β| = {worst:.2e}"),
    )
}

fn monte_carlo_energy() -> Verdict {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for beta in [2.0, 20.0, 200.0] {
        let mdp = maze("maze9", beta);
        let (m, t, sol) = solve(&mdp.model);
        let d = driven_matrix(&t, &sol).unwrap();
        let steady = steady_state_distribution(&sol);
        let analytic = mean_energy_per_step(&sol, m.rewards());
        let batch = sample_trajectories(&d.matrix, &steady, m.rewards(), 10_000, 200, 7).unwrap();
        let est = empirical_energy_and_kl(&batch, t.prior(), &d.matrix).unwrap().energy;
        let z = (analytic - est.mean).abs() / est.std_err;
        pass &= z <= 3.0;
        parts.push(format!(
            "β={beta}: analytic {analytic:.6}, MC {:.6} ± {:.1e} ({z:.2} SE)",
            est.mean, est.std_err
        ));
    }
    let elapsed = start.elapsed();
    verdict(
        pass && within(elapsed, 60.0),
        format!("{}; {elapsed:.2?}", parts.join("; ")),
    )
}

fn beta_sweep_trends() -> Verdict {
    let betas = [1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 100.0, 200.0];
    let mut energy = Vec::new();
    let mut kl = Vec::new();
    for &beta in &betas {
        let mdp = maze("maze9", beta);
        let (m, t, sol) = solve(&mdp.model);
        let d = driven_matrix(&t, &sol).unwrap();
        let steady = steady_state_distribution(&sol);
        energy.push(mean_energy_per_step(&sol, m.rewards()));
        kl.push(kl_rate(&d.matrix, t.prior(), &steady).unwrap());
    }
    let e_ok = energy.windows(2).all(|w| w[1] <= w[0] + 1e-10);
    let k_ok = kl.windows(2).all(|w| w[1] >= w[0] - 1e-10);
    let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>().join(", ");
    verdict(e_ok && k_ok, format!("energy [{}]; KL [{}]", fmt(&energy), fmt(&kl)))
}

fn utheta_convergence() -> Verdict {
    let start = Instant::now();
    let beta = 10.0;
    let mdp = maze("frozen4", beta);
    let (m, _, sol) = solve(&mdp.model);
    let sampler = ModelSampler::new(&m, mdp.start_distribution()).unwrap();
    let horizon = 1000;
    let episodes = 1000;
    let total = (horizon * episodes) as u64;
    let cfg = TrainConfig {
        schedule: ScheduleConfig::step_decay(total),
        episodes,
        horizon,
        seed: 2024,
        replicas: 32,
        log_every: total / 100,
        eval_episodes: 0,
    };
    let results = train(&sampler, &cfg).unwrap();
    let at = |step: u64| {
        let thetas: Vec<f64> = results
            .iter()
            .map(|r| r.history.iter().find(|h| h.step == step).unwrap().theta)
            .collect();
        summarize(&thetas)
    };
    let early = at(total / 10);
    let end = at(total);
    let rel = (end.mean - sol.theta).abs() / sol.theta;
    let shrink = early.std_dev / end.std_dev;
    let elapsed = start.elapsed();
    verdict(
        rel <= 0.01 && shrink >= 5.0 && within(elapsed, 300.0),
        format!(
            "θ {:.6}, replica mean {:.6} (rel err {rel:.1e}), std {:.2e} -> {:.2e} (shrink {shrink:.1}x), {elapsed:.2?}",
            sol.theta, end.mean, early.std_dev, end.std_dev
        ),
    )
}

fn property_suite() -> Verdict {
    let mut failures = Vec::new();
    let mut models: Vec<(String, ldrl_core::MdpModel)> =
        all_mazes(5.0).into_iter().map(|(n, m)| (n, m.model)).collect();
    models.extend((0..10).map(|s| (format!("random {s}"), random_mdp(s))));
    models.push(("two-state".into(), two_state(1.0)));

    let (mut ext, mut stat, mut drift_max): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (name, model) in &models {
        let (m, t, sol) = solve(model);
        let e = build_extended_matrix(&t);
        for s in e.matrix().column_sums() {
            ext = ext.max((s - 1.0).abs());
        }
        let d = driven_matrix(&t, &sol).unwrap();
        let ss = steady_state_distribution(&sol);
        let image = d.matrix.matrix().mul_vec(&ss);
        for (a, b) in image.iter().zip(&ss) {
            stat = stat.max((a - b).abs());
        }
        let u = sol.u();
        let umax = u.iter().copied().fold(0.0, f64::max);
        let u: Vec<f64> = u.iter().map(|x| x / umax).collect();
        let drift = expected_drift(&m, &u, sol.rho).unwrap();
        let worst = drift.u.iter().chain(&drift.rho).fold(0.0f64, |acc, x| acc.max(x.abs()));
        if worst > 1e-10 {
            failures.push(format!("{name}: drift {worst:.1e}"));
        }
        drift_max = drift_max.max(worst);
    }
    if ext > 1e-12 {
        failures.push(format!("extended column sums off by {ext:.1e}"));
    }
    if stat > 1e-8 {
        failures.push(format!("u⊙v not stationary ({stat:.1e})"));
    }

    for (name, mdp) in all_mazes(5.0) {
        if mdp.model.dynamics().iter().all(|row| row.len() == 1) {
            let (m, _, sol) = solve(&mdp.model);
            if optimal_dynamics(&m, &sol).unwrap().table != m.dynamics() {
                failures.push(format!("{name}: p* != p at slip 0"));
            }
        }
    }

    let mut prior_gap: f64 = 0.0;
    for (_, mdp) in all_mazes(1e-6) {
        let (m, _, sol) = solve(&mdp.model);
        for (a, b) in optimal_policy(&m, &sol).unwrap().iter().zip(m.policy()) {
            prior_gap = prior_gap.max((a - b).abs());
        }
    }
    if prior_gap > 1e-6 {
        failures.push(format!("β=1e-6: ‖π* - π‖∞ = {prior_gap:.1e}"));
    }

    let mdp = maze("maze9", 20.0);
    let (m, _, sol) = solve(&mdp.model);
    let mut state = LearningState::new(m.n_pairs(), 20.0);
    state.u = sol.u();
    state.renormalize();
    let base = extract_policy(&state, m.policy(), 4).unwrap();
    for k in [-60, -7, 3, 45] {
        let mut scaled = state.clone();
        scaled.u.iter_mut().for_each(|x| *x *= 2f64.powi(k));
        if extract_policy(&scaled, m.policy(), 4).unwrap() != base {
            failures.push(format!("extract_policy not invariant under u -> 2^{k} u"));
        }
    }

    let pass = failures.is_empty();
    verdict(
        pass,
        if pass {
            format!(
                "{} models: extended sums {ext:.1e}, stationarity {stat:.1e}, drift {drift_max:.1e}, prior gap {prior_gap:.1e}; p* = p and gauge invariance exact",
                models.len()
            )
        } else {
            failures.join("; ")
        },
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("spectral-dp agreement (empty 10x10, β=10)", spectral_dp_agreement),
        ("two-state micro-oracle", two_state_oracle),
        ("bulk-marginal convergence (4x4 maze, β=2, N=250)", bulk_marginals),
        ("free-energy identity", free_energy_identity),
        ("analytic energy vs Monte Carlo (9x9 maze)", monte_carlo_energy),
        ("β-sweep trends (9x9 maze)", beta_sweep_trends),
        ("u-θ learning convergence (4x4 maze, β=10)", utheta_convergence),
        ("property suite", property_suite),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let v = run();
        println!("{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
