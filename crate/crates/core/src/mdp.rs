//! Tabular MDP data model and the transition, tilted and extended matrices
//! built from it.
//!
//! A trajectory under the prior is generated by a prior policy `π(a|s)` and
//! prior dynamics `p(s'|s, a)`. Conditioning on "optimality" at every step,
//! where a step at pair `(s, a)` is optimal with probability `exp(β r(s, a))`,
//! turns the entropy-regularized control problem into Bayesian inference over
//! trajectories. That interpretation only makes sense for `r ≤ 0`, so rewards
//! are shifted to have maximum zero by [`shift_rewards`], and the shift is
//! kept on the model so value functions can be reported in original units.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{CscMatrix, StochasticMatrix};
use crate::numeric::{exp, expm1};
use crate::validate::{validate_model, Violation};
use crate::{Error, PairIndex, Result};

/// Tabular MDP with a prior policy and inverse temperature.
///
/// Tables are indexed by pair (`PairIndex` layout): `policy[i] = π(a|s)`,
/// `rewards[i] = r(s, a)` and `dynamics[i]` lists `(s', p(s'|s, a))` for
/// the successors of `(s, a)`, sorted by `s'`.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    index: PairIndex,
    policy: Vec<f64>,
    dynamics: Vec<Vec<(usize, f64)>>,
    rewards: Vec<f64>,
    beta: f64,
    reward_shift: f64,
}

impl MdpModel {
    /// Checks shapes and index ranges only. Probabilistic invariants are
    /// reported by [`validate_model`] and enforced by the matrix builders.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        policy: Vec<f64>,
        dynamics: Vec<Vec<(usize, f64)>>,
        rewards: Vec<f64>,
        beta: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Domain("model needs at least one state and one action"));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain("beta must be positive and finite"));
        }
        let index = PairIndex::new(n_states, n_actions);
        let m = index.len();
        for (name, len) in [
            ("policy", policy.len()),
            ("dynamics", dynamics.len()),
            ("rewards", rewards.len()),
        ] {
            if len != m {
                return Err(Error::Shape(alloc::format!(
                    "{name} has {len} entries, expected {m} (= {n_states} x {n_actions})"
                )));
            }
        }
        let mut merged = Vec::with_capacity(m);
        for mut row in dynamics {
            row.sort_by_key(|&(s, _)| s);
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (s, p) in row {
                if s >= n_states {
                    return Err(Error::OutOfRange {
                        what: "next state",
                        index: s,
                        limit: n_states,
                    });
                }
                match out.last_mut() {
                    Some(last) if last.0 == s => last.1 += p,
                    _ => out.push((s, p)),
                }
            }
            merged.push(out);
        }
        Ok(Self {
            index,
            policy,
            dynamics: merged,
            rewards,
            beta,
            reward_shift: 0.0,
        })
    }

    pub fn index(&self) -> PairIndex {
        self.index
    }

    pub fn n_states(&self) -> usize {
        self.index.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.index.n_actions()
    }

    pub fn n_pairs(&self) -> usize {
        self.index.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Amount subtracted from every reward by [`shift_rewards`] (cumulative).
    pub fn reward_shift(&self) -> f64 {
        self.reward_shift
    }

    pub fn policy(&self) -> &[f64] {
        &self.policy
    }

    /// `π(·|s)` as a slice over actions.
    pub fn policy_row(&self, state: usize) -> &[f64] {
        &self.policy[self.index.state_pairs(state)]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[self.index.encode(state, action)]
    }

    pub fn dynamics(&self) -> &[Vec<(usize, f64)>] {
        &self.dynamics
    }

    /// `(s', p(s'|s, a))` for the successors of `(state, action)`.
    pub fn successors(&self, state: usize, action: usize) -> &[(usize, f64)] {
        &self.dynamics[self.index.encode(state, action)]
    }

    /// Same model at another inverse temperature.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain("beta must be positive and finite"));
        }
        Ok(Self { beta, ..self.clone() })
    }

    /// Replaces the reward table (same shape), keeping the recorded shift.
    pub fn with_rewards(&self, rewards: Vec<f64>) -> Result<Self> {
        if rewards.len() != self.n_pairs() {
            return Err(Error::Shape(alloc::format!(
                "rewards has {} entries, expected {}",
                rewards.len(),
                self.n_pairs()
            )));
        }
        Ok(Self {
            rewards,
            ..self.clone()
        })
    }

    /// Records `shift` as the amount already subtracted from the rewards
    /// (used when reloading a shifted model).
    pub fn with_reward_shift(mut self, shift: f64) -> Self {
        self.reward_shift = shift;
        self
    }

    /// Uniform distribution over the actions of `state`, as pair weights.
    pub fn uniform_over_actions(&self, state: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_pairs()];
        let k = self.n_actions() as f64;
        for i in self.index.state_pairs(state) {
            out[i] = 1.0 / k;
        }
        out
    }

    /// Prior initial pair distribution starting deterministically in
    /// `state`: `p(s₁, a₁) = δ(s₁, state) π(a₁|state)`.
    pub fn start_distribution(&self, state: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_pairs()];
        for i in self.index.state_pairs(state) {
            out[i] = self.policy[i];
        }
        out
    }
}

/// Returns the model with rewards shifted so that `max r = 0`; the shift is
/// accumulated in [`MdpModel::reward_shift`].
pub fn shift_rewards(model: &MdpModel) -> Result<MdpModel> {
    if let Some(pair) = model.rewards.iter().position(|r| !r.is_finite()) {
        return Err(Error::NonFiniteReward { pair });
    }
    let max = model.rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = model.clone();
    if max != 0.0 {
        out.rewards.iter_mut().for_each(|r| *r -= max);
        out.reward_shift += max;
    }
    Ok(out)
}

fn ensure_normalized(model: &MdpModel) -> Result<()> {
    let report = validate_model(model);
    let blocking: Vec<&Violation> = report
        .violations
        .iter()
        .filter(|v| !matches!(v, Violation::PositiveReward { .. }))
        .collect();
    match blocking.first() {
        None => Ok(()),
        Some(first) => Err(Error::InvalidModel {
            count: blocking.len(),
            first: alloc::format!("{first}"),
        }),
    }
}

/// Prior transition matrix over pairs: `P[j, i] = p(s'|s, a) π(a'|s')` with
/// `i = (s, a)` and `j = (s', a')`.
pub fn compose_transition_matrix(model: &MdpModel) -> Result<StochasticMatrix> {
    ensure_normalized(model)?;
    let index = model.index;
    let columns = (0..index.len())
        .map(|i| {
            let mut col = Vec::new();
            for &(next, p) in &model.dynamics[i] {
                for j in index.state_pairs(next) {
                    let pi = model.policy[j];
                    if pi > 0.0 && p > 0.0 {
                        col.push((j, p * pi));
                    }
                }
            }
            col
        })
        .collect();
    let matrix = CscMatrix::from_columns(index.len(), columns)?;
    StochasticMatrix::new(index, matrix)
}

/// `P̃[j, i] = P[j, i] exp(β r_i)`: sub-stochastic, column `i` sums to the
/// single-step optimality probability `exp(β r_i)`.
///
/// The log column weights `β r_i` are kept alongside the linear entries so
/// log-domain solvers never touch values that may underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedMatrix {
    prior: StochasticMatrix,
    matrix: CscMatrix,
    rewards: Vec<f64>,
    beta: f64,
}

impl TiltedMatrix {
    pub fn index(&self) -> PairIndex {
        self.prior.index()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// The untilted source matrix `P`.
    pub fn prior(&self) -> &StochasticMatrix {
        &self.prior
    }

    /// Linear entries of `P̃` (may underflow to zero at very large β).
    pub fn matrix(&self) -> &CscMatrix {
        &self.matrix
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `β r_i`, the log scale of column `i`.
    #[inline]
    pub fn log_weight(&self, i: usize) -> f64 {
        self.beta * self.rewards[i]
    }

    pub fn get(&self, to: usize, from: usize) -> f64 {
        self.matrix.get(to, from)
    }

    /// `log P̃[j, i]` for stored entries, as `(j, log value)` pairs of column `i`.
    pub fn log_column(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let w = self.log_weight(i);
        let (rows, vals) = self.prior.matrix().column(i);
        rows.iter().zip(vals).map(move |(&j, &p)| (j, libm::log(p) + w))
    }
}

pub fn build_tilted_matrix(model: &MdpModel, prior: &StochasticMatrix) -> Result<TiltedMatrix> {
    if prior.index() != model.index {
        return Err(Error::Shape(alloc::format!(
            "transition matrix has {} pairs, model has {}",
            prior.index().len(),
            model.n_pairs()
        )));
    }
    if let Some(pair) = model.rewards.iter().position(|r| !r.is_finite()) {
        return Err(Error::NonFiniteReward { pair });
    }
    if let Some((pair, &value)) = model.rewards.iter().enumerate().find(|(_, &r)| r > 0.0) {
        return Err(Error::PositiveReward { pair, value });
    }
    let beta = model.beta;
    let mut matrix = prior.matrix().clone();
    for (i, &r) in model.rewards.iter().enumerate() {
        if r != 0.0 {
            matrix.scale_column(i, exp(beta * r));
        }
    }
    Ok(TiltedMatrix {
        prior: prior.clone(),
        matrix,
        rewards: model.rewards.clone(),
        beta,
    })
}

/// Convenience: shift rewards, compose `P` and tilt it.
pub fn tilted_from_model(model: &MdpModel) -> Result<(MdpModel, TiltedMatrix)> {
    let shifted = shift_rewards(model)?;
    let prior = compose_transition_matrix(&shifted)?;
    let tilted = build_tilted_matrix(&shifted, &prior)?;
    Ok((shifted, tilted))
}

/// `(M+1) × (M+1)` stochastic embedding of the tilted matrix: the extra last
/// state is absorbing and collects `δ_i = 1 - exp(β r_i)` from column `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedMatrix {
    matrix: CscMatrix,
    delta: Vec<f64>,
}

impl ExtendedMatrix {
    pub fn matrix(&self) -> &CscMatrix {
        &self.matrix
    }

    /// Absorption probabilities `δ_i` for the `M` transient pairs.
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// Index of the absorbing state (`M`).
    pub fn absorbing_state(&self) -> usize {
        self.delta.len()
    }
}

pub fn build_extended_matrix(tilted: &TiltedMatrix) -> ExtendedMatrix {
    let m = tilted.dim();
    let delta: Vec<f64> = (0..m).map(|i| -expm1(tilted.log_weight(i))).collect();
    let mut columns: Vec<Vec<(usize, f64)>> = (0..m)
        .map(|i| {
            let (rows, vals) = tilted.matrix().column(i);
            let mut col: Vec<(usize, f64)> = rows.iter().copied().zip(vals.iter().copied()).collect();
            col.push((m, delta[i]));
            col
        })
        .collect();
    columns.push(vec![(m, 1.0)]);
    let matrix = CscMatrix::from_columns(m + 1, columns).expect("rows are in range by construction");
    ExtendedMatrix { matrix, delta }
}
