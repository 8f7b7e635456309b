//! Model-free estimation of the left Perron vector `u` and the free-energy
//! rate `θ` from transitions sampled under the prior.
//!
//! The eigen-relation `ρ u(s, a) = e^{β r(s,a)} E[u(s', a')]`, with the
//! expectation over `s' ~ p(·|s, a)` and `a' ~ π(·|s')`, is solved by
//! stochastic approximation. For each sampled `(s, a, r, s', a')`:
//!
//! > u(s, a) ← (1 - α) u(s, a) + α e^{βr} u(s', a') / ρ
//! > ρ ← (1 - α_θ) ρ + α_θ e^{βr} u(s', a') / u(s, a)
//!
//! in that order, the second using the freshly updated `u(s, a)`. Only the
//! direction of `u` is identifiable, so it is rescaled to unit maximum every
//! `renormalize_every` steps; `ρ` (and hence `θ`) is unaffected.

use alloc::vec;
use alloc::vec::Vec;

use crate::gridworld::env_step;
use crate::mdp::shift_rewards;
use crate::numeric::{exp, log, summarize};
use crate::sim::sample_categorical;
use crate::{stream_rng, Error, MdpModel, Result};

/// Lower bound on every `u` entry.
pub const U_FLOOR: f64 = 1e-30;

/// Learning-rate schedule as a function of the step count `t` (from 0).
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// `max(initial / (1 + t/tau)^exponent, floor)`.
    Polynomial {
        initial: f64,
        tau: f64,
        exponent: f64,
        floor: f64,
    },
    /// `(start_step, rate)` segments sorted by start; the first must start at
    /// 0.
    Piecewise(Vec<(u64, f64)>),
}

impl Schedule {
    pub fn rate(&self, t: u64) -> f64 {
        match self {
            Self::Constant(a) => *a,
            Self::Polynomial {
                initial,
                tau,
                exponent,
                floor,
            } => (initial / libm::pow(1.0 + t as f64 / tau, *exponent)).max(*floor),
            Self::Piecewise(segments) => {
                let k = segments.partition_point(|&(start, _)| start <= t);
                segments[k.saturating_sub(1)].1
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let in_range = |a: f64| a > 0.0 && a <= 1.0;
        match self {
            Self::Constant(a) if !in_range(*a) => Err(Error::Domain("learning rates must lie in (0, 1]")),
            Self::Polynomial {
                initial,
                tau,
                exponent,
                floor,
            } => {
                if !in_range(*initial) || !(*floor >= 0.0 && *floor <= *initial) {
                    return Err(Error::Domain("learning rates must lie in (0, 1]"));
                }
                if !(*tau > 0.0) || !(*exponent >= 0.0) {
                    return Err(Error::Domain("decay needs tau > 0 and exponent >= 0"));
                }
                Ok(())
            }
            Self::Piecewise(segments) => {
                if segments.first().map(|s| s.0) != Some(0) {
                    return Err(Error::Domain("piecewise schedule must start at step 0"));
                }
                if segments.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::Domain("piecewise segments must have increasing starts"));
                }
                if segments.iter().any(|&(_, a)| !in_range(a)) {
                    return Err(Error::Domain("learning rates must lie in (0, 1]"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    pub alpha: Schedule,
    pub alpha_theta: Schedule,
    pub renormalize_every: u64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            alpha: Schedule::Polynomial {
                initial: 0.1,
                tau: 1e4,
                exponent: 0.6,
                floor: 0.0,
            },
            alpha_theta: Schedule::Polynomial {
                initial: 0.01,
                tau: 1e4,
                exponent: 0.8,
                floor: 0.0,
            },
            renormalize_every: 1000,
        }
    }
}

impl ScheduleConfig {
    /// Constant-rate warm-up for the first 10% of `total_steps`, then step
    /// decay by factors of about 3 at 10%, 25%, 50% and 75%, starting from
    /// `α = 0.1`, `α_θ = 0.01`.
    pub fn step_decay(total_steps: u64) -> Self {
        const BREAKS: [f64; 5] = [0.0, 0.1, 0.25, 0.5, 0.75];
        const FACTORS: [f64; 5] = [1.0, 0.3, 0.1, 0.03, 0.01];
        let segments = |initial: f64| {
            BREAKS
                .iter()
                .zip(FACTORS)
                .map(|(&b, f)| ((b * total_steps as f64) as u64, initial * f))
                .collect::<Vec<_>>()
        };
        let mut alpha = segments(0.1);
        let mut alpha_theta = segments(0.01);
        alpha.dedup_by_key(|s| s.0);
        alpha_theta.dedup_by_key(|s| s.0);
        Self {
            alpha: Schedule::Piecewise(alpha),
            alpha_theta: Schedule::Piecewise(alpha_theta),
            renormalize_every: 1000,
        }
    }

    /// Checks rate ranges and that `α_θ / α` never increases (checked on a
    /// geometric grid of steps up to 10¹²).
    pub fn validate(&self) -> Result<()> {
        self.alpha.validate()?;
        self.alpha_theta.validate()?;
        if self.renormalize_every == 0 {
            return Err(Error::Domain("renormalization period must be positive"));
        }
        let mut steps: Vec<u64> = (0..=12).map(|k| 10u64.pow(k)).collect();
        for sched in [&self.alpha, &self.alpha_theta] {
            if let Schedule::Piecewise(segments) = sched {
                for &(s, _) in segments {
                    steps.extend([s.saturating_sub(1), s]);
                }
            }
        }
        steps.sort_unstable();
        steps.dedup();
        let ratios: Vec<f64> = steps
            .iter()
            .map(|&t| self.alpha_theta.rate(t) / self.alpha.rate(t))
            .collect();
        if ratios.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            return Err(Error::Domain("alpha_theta must decay at least as fast as alpha"));
        }
        Ok(())
    }
}

/// Live `(u, ρ)` estimates of one learner.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningState {
    pub u: Vec<f64>,
    /// `ρ = exp(-βθ)`, kept in `(0, 1]`.
    pub rho: f64,
    pub step: u64,
    pub beta: f64,
    pub alpha: f64,
    pub alpha_theta: f64,
    /// Number of θ updates skipped because `u(s, a)` hit the floor.
    pub skipped_theta: u64,
}

impl LearningState {
    /// `u ≡ 1`, `ρ = 1`.
    pub fn new(n_pairs: usize, beta: f64) -> Self {
        Self {
            u: vec![1.0; n_pairs],
            rho: 1.0,
            step: 0,
            beta,
            alpha: 0.0,
            alpha_theta: 0.0,
            skipped_theta: 0,
        }
    }

    pub fn theta(&self) -> f64 {
        -log(self.rho) / self.beta
    }

    /// Divides `u` by its maximum.
    pub fn renormalize(&mut self) {
        let m = self.u.iter().copied().fold(0.0, f64::max);
        if m > 0.0 {
            self.u.iter_mut().for_each(|x| *x = (*x / m).max(U_FLOOR));
        }
    }
}

/// One experienced transition `(s, a) → (s', a')` with its pair indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub pair: usize,
    pub reward: f64,
    pub next_pair: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Updated,
    /// `u(s, a)` reached the floor; only `u` was updated.
    ThetaSkipped,
}

/// Applies one u-θ update and advances the schedules.
pub fn td_step(state: &mut LearningState, tr: Transition, schedule: &ScheduleConfig) -> StepOutcome {
    let alpha = schedule.alpha.rate(state.step);
    let alpha_theta = schedule.alpha_theta.rate(state.step);
    state.alpha = alpha;
    state.alpha_theta = alpha_theta;
    let w = exp(state.beta * tr.reward) * state.u[tr.next_pair];
    let i = tr.pair;
    state.u[i] = (1.0 - alpha) * state.u[i] + alpha * w / state.rho;
    let outcome = if state.u[i] <= U_FLOOR {
        state.u[i] = U_FLOOR;
        state.skipped_theta += 1;
        StepOutcome::ThetaSkipped
    } else {
        let rho = (1.0 - alpha_theta) * state.rho + alpha_theta * w / state.u[i];
        state.rho = rho.clamp(f64::MIN_POSITIVE, 1.0);
        StepOutcome::Updated
    };
    state.step += 1;
    if state.step % schedule.renormalize_every == 0 {
        state.renormalize();
    }
    outcome
}

/// Source of experience under the prior policy.
pub trait Sampler {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn beta(&self) -> f64;
    /// Prior policy as a pair table.
    fn prior_policy(&self) -> &[f64];
    /// Initial pair of an episode.
    fn reset(&self, rng: &mut dyn rand::RngCore) -> usize;
    /// Samples `s' ~ p(·|s, a)`; returns `(s', r(s, a))`.
    fn step(&self, state: usize, action: usize, rng: &mut dyn rand::RngCore) -> (usize, f64);
}

/// Samples from a known model (rewards shifted to `max r = 0`).
#[derive(Debug, Clone)]
pub struct ModelSampler {
    model: MdpModel,
    initial: Vec<f64>,
}

impl ModelSampler {
    pub fn new(model: &MdpModel, initial: Vec<f64>) -> Result<Self> {
        if initial.len() != model.n_pairs() {
            return Err(Error::Shape(alloc::format!(
                "initial distribution has {} entries, expected {}",
                initial.len(),
                model.n_pairs()
            )));
        }
        if !(initial.iter().sum::<f64>() > 0.0) {
            return Err(Error::DegenerateInitial);
        }
        Ok(Self {
            model: shift_rewards(model)?,
            initial,
        })
    }

    pub fn model(&self) -> &MdpModel {
        &self.model
    }
}

impl Sampler for ModelSampler {
    fn n_states(&self) -> usize {
        self.model.n_states()
    }

    fn n_actions(&self) -> usize {
        self.model.n_actions()
    }

    fn beta(&self) -> f64 {
        self.model.beta()
    }

    fn prior_policy(&self) -> &[f64] {
        self.model.policy()
    }

    fn reset(&self, rng: &mut dyn rand::RngCore) -> usize {
        sample_categorical(self.initial.iter().copied(), rng)
    }

    fn step(&self, state: usize, action: usize, rng: &mut dyn rand::RngCore) -> (usize, f64) {
        env_step(&self.model, state, action, rng).expect("indices come from the sampler")
    }
}

fn sample_action<S: Sampler + ?Sized>(sampler: &S, policy: &[f64], state: usize, rng: &mut dyn rand::RngCore) -> usize {
    let k = sampler.n_actions();
    sample_categorical(policy[state * k..(state + 1) * k].iter().copied(), rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub schedule: ScheduleConfig,
    pub episodes: usize,
    /// Steps per episode.
    pub horizon: usize,
    pub seed: u64,
    pub replicas: usize,
    /// History is recorded every `log_every` steps (0 disables it).
    pub log_every: u64,
    /// Rollouts of the extracted policy per history point (0 skips them).
    pub eval_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleConfig::default(),
            episodes: 100,
            horizon: 1000,
            seed: 0,
            replicas: 1,
            log_every: 1000,
            eval_episodes: 0,
        }
    }
}

impl TrainConfig {
    pub fn total_steps(&self) -> u64 {
        (self.episodes * self.horizon) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryPoint {
    pub step: u64,
    pub theta: f64,
    /// Mean undiscounted return per episode of the extracted policy (NaN when
    /// not evaluated).
    pub mean_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaResult {
    pub replica: usize,
    pub state: LearningState,
    pub history: Vec<HistoryPoint>,
}

/// Mean return per episode of `policy` over `episodes` rollouts.
pub fn evaluate_policy<S: Sampler + ?Sized>(
    sampler: &S,
    policy: &[f64],
    episodes: usize,
    horizon: usize,
    rng: &mut dyn rand::RngCore,
) -> f64 {
    let k = sampler.n_actions();
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut pair = sampler.reset(rng);
        let mut total = 0.0;
        for _ in 0..horizon {
            let (s, a) = (pair / k, pair % k);
            let (next, r) = sampler.step(s, a, rng);
            total += r;
            pair = next * k + sample_action(sampler, policy, next, rng);
        }
        returns.push(total);
    }
    summarize(&returns).mean
}

/// Trains replica `replica`: experience comes from RNG stream `2 * replica`
/// of `cfg.seed`, evaluation rollouts from stream `2 * replica + 1`.
pub fn train_replica<S: Sampler + ?Sized>(sampler: &S, cfg: &TrainConfig, replica: usize) -> Result<ReplicaResult> {
    cfg.schedule.validate()?;
    if cfg.horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1"));
    }
    let k = sampler.n_actions();
    let n_pairs = sampler.n_states() * k;
    let policy = sampler.prior_policy();
    let mut rng = stream_rng(cfg.seed, 2 * replica as u64);
    let mut eval_rng = stream_rng(cfg.seed, 2 * replica as u64 + 1);
    let mut state = LearningState::new(n_pairs, sampler.beta());
    let mut history = Vec::new();
    let record = |state: &LearningState, eval_rng: &mut crate::SimRng| -> Result<HistoryPoint> {
        let mean_return = if cfg.eval_episodes > 0 {
            let pi = extract_policy(state, policy, k)?.policy;
            evaluate_policy(sampler, &pi, cfg.eval_episodes, cfg.horizon, eval_rng)
        } else {
            f64::NAN
        };
        Ok(HistoryPoint {
            step: state.step,
            theta: state.theta(),
            mean_return,
        })
    };
    if cfg.log_every > 0 {
        history.push(record(&state, &mut eval_rng)?);
    }
    for _ in 0..cfg.episodes {
        let mut pair = sampler.reset(&mut rng);
        for _ in 0..cfg.horizon {
            let (s, a) = (pair / k, pair % k);
            let (next, reward) = sampler.step(s, a, &mut rng);
            let next_pair = next * k + sample_action(sampler, policy, next, &mut rng);
            td_step(
                &mut state,
                Transition {
                    pair,
                    reward,
                    next_pair,
                },
                &cfg.schedule,
            );
            pair = next_pair;
            if cfg.log_every > 0 && state.step % cfg.log_every == 0 {
                history.push(record(&state, &mut eval_rng)?);
            }
        }
    }
    Ok(ReplicaResult {
        replica,
        state,
        history,
    })
}

/// Runs `cfg.replicas` independent replicas in sequence.
pub fn train<S: Sampler + ?Sized>(sampler: &S, cfg: &TrainConfig) -> Result<Vec<ReplicaResult>> {
    (0..cfg.replicas).map(|r| train_replica(sampler, cfg, r)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedPolicy {
    pub policy: Vec<f64>,
    /// States where every `u(s, ·)` sat at the floor and the uniform policy
    /// was used instead.
    pub fallback_states: Vec<usize>,
}

/// `π̂(a|s) = u(s, a) π(a|s) / Σ_a' u(s, a') π(a'|s)`.
///
/// Weights are scaled by the per-state maximum of `u`, so rescaling `u` by a
/// power of two leaves the output bitwise unchanged.
pub fn extract_policy(state: &LearningState, prior_policy: &[f64], n_actions: usize) -> Result<ExtractedPolicy> {
    if prior_policy.len() != state.u.len() || n_actions == 0 || state.u.len() % n_actions != 0 {
        return Err(Error::Shape(alloc::format!(
            "prior policy has {} entries, u has {}",
            prior_policy.len(),
            state.u.len()
        )));
    }
    let mut policy = Vec::with_capacity(state.u.len());
    let mut fallback_states = Vec::new();
    for (s, (u, pi)) in state
        .u
        .chunks(n_actions)
        .zip(prior_policy.chunks(n_actions))
        .enumerate()
    {
        let m = u.iter().copied().fold(0.0, f64::max);
        let w: Vec<f64> = u.iter().zip(pi).map(|(x, p)| p * (x / m)).collect();
        let z: f64 = w.iter().sum();
        if m <= U_FLOOR || !(z > 0.0) {
            fallback_states.push(s);
            policy.extend(core::iter::repeat_n(1.0 / n_actions as f64, n_actions));
        } else {
            policy.extend(w.iter().map(|x| x / z));
        }
    }
    Ok(ExtractedPolicy {
        policy,
        fallback_states,
    })
}

/// Expected one-step change of the estimates at `(u, ρ)`, enumerating the
/// successors of every pair of `model` (which must have `r ≤ 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    /// `E[e^{βr} u(s', a')] / ρ - u(s, a)`.
    pub u: Vec<f64>,
    /// `E[e^{βr} u(s', a')] / u(s, a) - ρ`.
    pub rho: Vec<f64>,
}

pub fn expected_drift(model: &MdpModel, u: &[f64], rho: f64) -> Result<Drift> {
    if u.len() != model.n_pairs() {
        return Err(Error::Shape(alloc::format!(
            "u has {} entries, expected {}",
            u.len(),
            model.n_pairs()
        )));
    }
    let index = model.index();
    let beta = model.beta();
    let mut du = Vec::with_capacity(u.len());
    let mut drho = Vec::with_capacity(u.len());
    for (i, succ) in model.dynamics().iter().enumerate() {
        let mut e = 0.0;
        for &(s, p) in succ {
            for j in index.state_pairs(s) {
                e += p * model.policy()[j] * u[j];
            }
        }
        e *= exp(beta * model.rewards()[i]);
        du.push(e / rho - u[i]);
        drho.push(e / u[i] - rho);
    }
    Ok(Drift { u: du, rho: drho })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_schedule(a: f64, b: f64) -> ScheduleConfig {
        ScheduleConfig {
            alpha: Schedule::Constant(a),
            alpha_theta: Schedule::Constant(b),
            renormalize_every: 1000,
        }
    }

    #[test]
    fn schedules_evaluate() {
        let p = Schedule::Polynomial {
            initial: 0.1,
            tau: 10.0,
            exponent: 1.0,
            floor: 0.01,
        };
        assert_eq!(p.rate(0), 0.1);
        assert!((p.rate(10) - 0.05).abs() < 1e-15);
        assert_eq!(p.rate(1_000_000), 0.01);
        let w = Schedule::Piecewise(vec![(0, 0.5), (10, 0.1), (20, 0.01)]);
        assert_eq!((w.rate(0), w.rate(9), w.rate(10), w.rate(25)), (0.5, 0.5, 0.1, 0.01));
    }

    #[test]
    fn schedule_validation() {
        assert!(ScheduleConfig::default().validate().is_ok());
        assert!(const_schedule(0.0, 0.1).validate().is_err());
        assert!(const_schedule(0.5, 1.5).validate().is_err());
        let slower = ScheduleConfig {
            alpha: Schedule::Polynomial {
                initial: 0.1,
                tau: 1.0,
                exponent: 0.8,
                floor: 0.0,
            },
            alpha_theta: Schedule::Polynomial {
                initial: 0.01,
                tau: 1.0,
                exponent: 0.6,
                floor: 0.0,
            },
            renormalize_every: 10,
        };
        assert!(slower.validate().is_err());
        assert!(ScheduleConfig {
            alpha: Schedule::Piecewise(vec![(5, 0.1)]),
            ..ScheduleConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn zero_reward_fixed_point() {
        let mut s = LearningState::new(3, 2.0);
        let before = s.clone();
        let outcome = td_step(
            &mut s,
            Transition {
                pair: 0,
                reward: 0.0,
                next_pair: 2,
            },
            &const_schedule(0.3, 0.1),
        );
        assert_eq!(outcome, StepOutcome::Updated);
        assert_eq!(s.u, before.u);
        assert_eq!(s.rho, 1.0);
    }

    #[test]
    fn full_overwrite_with_unit_rate() {
        let mut s = LearningState::new(2, 1.0);
        s.u = vec![0.2, 0.8];
        s.rho = 0.5;
        td_step(
            &mut s,
            Transition {
                pair: 0,
                reward: -1.0,
                next_pair: 1,
            },
            &const_schedule(1.0, 0.1),
        );
        assert!((s.u[0] - exp(-1.0) * 0.8 / 0.5).abs() < 1e-15);
    }

    #[test]
    fn floor_skips_theta_update() {
        let mut s = LearningState::new(2, 100.0);
        s.u = vec![1e-29, 1e-10];
        td_step(
            &mut s,
            Transition {
                pair: 0,
                reward: -1.0,
                next_pair: 1,
            },
            &const_schedule(1.0, 0.5),
        );
        assert_eq!(s.u[0], U_FLOOR);
        assert_eq!(s.rho, 1.0);
        assert_eq!(s.skipped_theta, 1);
    }

    #[test]
    fn extract_policy_with_uniform_u_is_prior() {
        let s = LearningState::new(4, 1.0);
        let prior = [0.2, 0.8, 0.5, 0.5];
        let out = extract_policy(&s, &prior, 2).unwrap();
        for (a, b) in out.policy.iter().zip(prior) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(out.fallback_states.is_empty());
    }

    #[test]
    fn extract_policy_falls_back_on_floor_state() {
        let mut s = LearningState::new(4, 1.0);
        s.u = vec![U_FLOOR, U_FLOOR, 1.0, 3.0];
        let out = extract_policy(&s, &[0.5; 4], 2).unwrap();
        assert_eq!(out.fallback_states, vec![0]);
        assert_eq!(&out.policy[..2], &[0.5, 0.5]);
        assert!((out.policy[3] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn renormalization_keeps_theta() {
        let mut s = LearningState::new(3, 1.0);
        s.u = vec![4.0, 2.0, 1.0];
        s.rho = 0.3;
        let theta = s.theta();
        s.renormalize();
        assert_eq!(s.u, vec![1.0, 0.5, 0.25]);
        assert_eq!(s.theta(), theta);
    }
}
