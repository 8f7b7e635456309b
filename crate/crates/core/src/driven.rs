//! Optimal controlled process derived from the Perron triplet.
//!
//! Conditioning the prior chain on staying optimal for a long horizon gives,
//! far from both ends of the trajectory, a time-homogeneous Markov chain with
//! generator
//!
//! > P_d[j, i] = P̃[j, i] u_j / (ρ u_i),
//!
//! a generalized Doob transform. It factorizes into an optimal policy
//! `π*(a|s) ∝ π(a|s) u(s, a)` and optimal dynamics `p*(s'|s, a)`; its
//! stationary distribution is `u ⊙ v`.
//!
//! All functions expecting an [`MdpModel`] take the *shifted* model (the one
//! the tilted matrix was built from, see [`crate::mdp::tilted_from_model`]).
//! Everything is computed from `log u`, so no quantity is formed in linear
//! scale before it is a normalized probability.

use alloc::vec::Vec;

use crate::matrix::{CscMatrix, StochasticMatrix};
use crate::numeric::{compensated_sum, exp, ln, log_sum_exp, softmax};
use crate::spectral::LOG_POSITIVITY_FLOOR;
use crate::{Error, MdpModel, Result, SpectralSolution, TiltedMatrix};

fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Shape(alloc::format!(
            "{what} has {got} entries, expected {expected}"
        )));
    }
    Ok(())
}

fn check_floor(sol: &SpectralSolution) -> Result<()> {
    match sol.log_u.iter().position(|&x| !(x >= LOG_POSITIVITY_FLOOR)) {
        Some(pair) => Err(Error::DegenerateEigenvector { pair }),
        None => Ok(()),
    }
}

/// Driven matrix together with its normalization diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenMatrix {
    pub matrix: StochasticMatrix,
    /// `max_i |Σ_j P_d[j, i] - 1|` before renormalization.
    pub max_correction: f64,
}

/// `P_d[j, i] = P̃[j, i] u_j / (ρ u_i)`, columns renormalized.
pub fn driven_matrix(tilted: &TiltedMatrix, sol: &SpectralSolution) -> Result<DrivenMatrix> {
    check_len("eigenvector", sol.len(), tilted.dim())?;
    check_floor(sol)?;
    let n = tilted.dim();
    let mut max_correction: f64 = 0.0;
    let mut columns = Vec::with_capacity(n);
    for i in 0..n {
        let shift = sol.log_rho + sol.log_u[i];
        let logs: Vec<(usize, f64)> = tilted
            .log_column(i)
            .map(|(j, lp)| (j, lp + sol.log_u[j] - shift))
            .collect();
        let z = log_sum_exp(logs.iter().map(|&(_, l)| l));
        max_correction = max_correction.max((exp(z) - 1.0).abs());
        columns.push(logs.into_iter().map(|(j, l)| (j, exp(l - z))).collect());
    }
    let matrix = CscMatrix::from_columns(n, columns)?;
    Ok(DrivenMatrix {
        matrix: StochasticMatrix::with_tolerance(tilted.index(), matrix, 1e-10)?,
        max_correction,
    })
}

/// `π*(a|s) = π(a|s) u(s, a) / Σ_a' π(a'|s) u(s, a')`, as a pair table.
pub fn optimal_policy(model: &MdpModel, sol: &SpectralSolution) -> Result<Vec<f64>> {
    check_len("eigenvector", sol.len(), model.n_pairs())?;
    check_floor(sol)?;
    policy_from_log_u(model, &sol.log_u)
}

pub(crate) fn policy_from_log_u(model: &MdpModel, log_u: &[f64]) -> Result<Vec<f64>> {
    let index = model.index();
    let mut out = Vec::with_capacity(index.len());
    for s in 0..model.n_states() {
        let logs: Vec<f64> = index.state_pairs(s).map(|i| ln(model.policy()[i]) + log_u[i]).collect();
        if logs.iter().all(|&l| l == f64::NEG_INFINITY) {
            return Err(Error::DegenerateState { state: s });
        }
        out.extend(softmax(&logs));
    }
    Ok(out)
}

/// `log Σ_a π(a|s) u(s, a)` for every state.
fn log_state_weights(model: &MdpModel, log_u: &[f64]) -> Vec<f64> {
    let index = model.index();
    (0..model.n_states())
        .map(|s| log_sum_exp(index.state_pairs(s).map(|i| ln(model.policy()[i]) + log_u[i])))
        .collect()
}

/// Optimal transition kernel with its normalization diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalDynamics {
    /// Same layout as [`MdpModel::dynamics`]: `(s', p*(s'|s, a))` per pair.
    pub table: Vec<Vec<(usize, f64)>>,
    /// `max |Σ_s' p*(s'|s, a) - 1|` before renormalization.
    pub max_correction: f64,
}

/// `p*(s'|s, a) = p(s'|s, a) e^{β r(s,a)} Σ_a' π(a'|s') u(s', a') / (ρ u(s, a))`,
/// rows renormalized. A point-mass kernel is returned unchanged.
pub fn optimal_dynamics(model: &MdpModel, sol: &SpectralSolution) -> Result<OptimalDynamics> {
    check_len("eigenvector", sol.len(), model.n_pairs())?;
    check_floor(sol)?;
    let beta = model.beta();
    let lw = log_state_weights(model, &sol.log_u);
    let mut max_correction: f64 = 0.0;
    let table = model
        .dynamics()
        .iter()
        .enumerate()
        .map(|(i, succ)| {
            let shift = beta * model.rewards()[i] - sol.log_rho - sol.log_u[i];
            let logs: Vec<(usize, f64)> = succ
                .iter()
                .filter(|&&(_, p)| p > 0.0)
                .map(|&(s, p)| (s, ln(p) + lw[s] + shift))
                .collect();
            let z = log_sum_exp(logs.iter().map(|&(_, l)| l));
            max_correction = max_correction.max((exp(z) - 1.0).abs());
            logs.into_iter().map(|(s, l)| (s, exp(l - z))).collect()
        })
        .collect();
    Ok(OptimalDynamics { table, max_correction })
}

/// Posterior over the first pair, `∝ prior_initial ⊙ u`.
pub fn optimal_initial_distribution(prior_initial: &[f64], sol: &SpectralSolution) -> Result<Vec<f64>> {
    check_len("initial distribution", prior_initial.len(), sol.len())?;
    let logs: Vec<f64> = prior_initial
        .iter()
        .zip(&sol.log_u)
        .map(|(&p, &lu)| ln(p) + lu)
        .collect();
    let z = log_sum_exp(logs.iter().copied());
    if !z.is_finite() {
        return Err(Error::DegenerateInitial);
    }
    Ok(logs.iter().map(|&l| exp(l - z)).collect())
}

/// Bulk distribution `u ⊙ v`.
pub fn steady_state_distribution(sol: &SpectralSolution) -> Vec<f64> {
    let logs: Vec<f64> = sol.log_u.iter().zip(&sol.log_v).map(|(a, b)| a + b).collect();
    softmax(&logs)
}

/// Soft value tables at horizon `N` in the long-time approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunctions {
    /// `Q(s, a) = -θN + log u(s, a) / β`, in shifted-reward units.
    pub q: Vec<f64>,
    /// `V(s) = -θN + log Σ_a π(a|s) u(s, a) / β`.
    pub v: Vec<f64>,
    pub horizon: usize,
    pub theta: f64,
    /// Reward shift of the model; `N · shift` restores original units.
    pub reward_shift: f64,
}

impl ValueFunctions {
    /// Free energy `F = -Q`.
    pub fn free_energy(&self) -> Vec<f64> {
        self.q.iter().map(|q| -q).collect()
    }

    /// Bulk free energy per step, the `N → ∞` limit of `F / N`.
    pub fn free_energy_rate(&self) -> f64 {
        self.theta
    }

    /// `(Q, V)` in original reward units.
    pub fn unshifted(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self.horizon as f64 * self.reward_shift;
        (
            self.q.iter().map(|q| q + c).collect(),
            self.v.iter().map(|v| v + c).collect(),
        )
    }
}

pub fn value_functions(model: &MdpModel, sol: &SpectralSolution, horizon: usize) -> Result<ValueFunctions> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1"));
    }
    check_len("eigenvector", sol.len(), model.n_pairs())?;
    let beta = model.beta();
    let offset = -sol.theta * horizon as f64;
    let q = sol.log_u.iter().map(|lu| offset + lu / beta).collect();
    let v = log_state_weights(model, &sol.log_u)
        .into_iter()
        .map(|lw| offset + lw / beta)
        .collect();
    Ok(ValueFunctions {
        q,
        v,
        horizon,
        theta: sol.theta,
        reward_shift: model.reward_shift(),
    })
}

/// Mean energetic cost per step in the bulk, `-Σ (u⊙v)_i r_i`.
pub fn mean_energy_per_step(sol: &SpectralSolution, rewards: &[f64]) -> f64 {
    let terms: Vec<f64> = steady_state_distribution(sol)
        .iter()
        .zip(rewards)
        .map(|(p, r)| -p * r)
        .collect();
    compensated_sum(&terms)
}

/// Relative entropy per step of the driven chain against the prior,
/// `Σ_i steady_i Σ_j P_d[j, i] log(P_d[j, i] / P[j, i])`.
pub fn kl_rate(driven: &StochasticMatrix, prior: &StochasticMatrix, steady: &[f64]) -> Result<f64> {
    let n = driven.matrix().dim();
    check_len("prior", prior.matrix().dim(), n)?;
    check_len("steady state", steady.len(), n)?;
    let mut terms = Vec::with_capacity(driven.matrix().nnz());
    for (i, &w) in steady.iter().enumerate() {
        let (rows, vals) = driven.matrix().column(i);
        for (&j, &pd) in rows.iter().zip(vals) {
            let p = prior.get(j, i);
            if p <= 0.0 {
                return Err(Error::AbsoluteContinuity { from: i, to: j });
            }
            terms.push(w * pd * (ln(pd) - ln(p)));
        }
    }
    Ok(compensated_sum(&terms))
}

/// Every optimal-control object derived from one spectral solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenSolution {
    pub driven: DrivenMatrix,
    pub policy: Vec<f64>,
    pub dynamics: OptimalDynamics,
    pub initial: Vec<f64>,
    pub steady_state: Vec<f64>,
    pub values: ValueFunctions,
    pub energy_rate: f64,
    pub kl_rate: f64,
}

/// Derives the full [`DrivenSolution`]; `model` is the shifted model behind
/// `tilted`.
pub fn solve_driven(
    model: &MdpModel,
    tilted: &TiltedMatrix,
    sol: &SpectralSolution,
    prior_initial: &[f64],
    horizon: usize,
) -> Result<DrivenSolution> {
    let driven = driven_matrix(tilted, sol)?;
    let steady_state = steady_state_distribution(sol);
    let kl = kl_rate(&driven.matrix, tilted.prior(), &steady_state)?;
    Ok(DrivenSolution {
        policy: optimal_policy(model, sol)?,
        dynamics: optimal_dynamics(model, sol)?,
        initial: optimal_initial_distribution(prior_initial, sol)?,
        values: value_functions(model, sol, horizon)?,
        energy_rate: mean_energy_per_step(sol, model.rewards()),
        kl_rate: kl,
        steady_state,
        driven,
    })
}
