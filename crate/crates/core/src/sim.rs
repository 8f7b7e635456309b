//! Trajectory sampling, occupation statistics and exact finite-horizon
//! marginals of the optimality-conditioned chain.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use rand::Rng;

use crate::numeric::{exp, ln, log_sum_exp, summarize, Summary};
use crate::spectral::LogOperator;
use crate::{stream_rng, Error, Result, StochasticMatrix, TiltedMatrix};

/// Draws an index with probability proportional to `weights`.
pub fn sample_categorical<R, I>(weights: I, rng: &mut R) -> usize
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = weights.into_iter();
    let total: f64 = iter.clone().sum();
    let mut x = rng.random::<f64>() * total;
    let mut last = 0;
    for (k, w) in iter.enumerate() {
        if w > 0.0 {
            if x < w {
                return k;
            }
            x -= w;
            last = k;
        }
    }
    last
}

/// Pair sequence `z_1 … z_N` with the reward collected at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub pairs: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `R_τ = Σ_t r(z_t)`.
    pub fn total_return(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// `E_τ = -R_τ`.
    pub fn energy(&self) -> f64 {
        -self.total_return()
    }
}

fn check_inputs(kernel: &StochasticMatrix, initial: &[f64], rewards: &[f64]) -> Result<()> {
    let n = kernel.matrix().dim();
    for (what, len) in [("initial distribution", initial.len()), ("rewards", rewards.len())] {
        if len != n {
            return Err(Error::Shape(alloc::format!("{what} has {len} entries, expected {n}")));
        }
    }
    if !(initial.iter().sum::<f64>() > 0.0) || initial.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::DegenerateInitial);
    }
    Ok(())
}

/// One trajectory of length `horizon` from `rng`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    kernel: &StochasticMatrix,
    initial: &[f64],
    rewards: &[f64],
    horizon: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    check_inputs(kernel, initial, rewards)?;
    let mut pairs = Vec::with_capacity(horizon);
    let mut rs = Vec::with_capacity(horizon);
    if horizon == 0 {
        return Ok(Trajectory { pairs, rewards: rs });
    }
    let mut z = sample_categorical(initial.iter().copied(), rng);
    for t in 0..horizon {
        if t > 0 {
            let (rows, vals) = kernel.matrix().column(z);
            z = rows[sample_categorical(vals.iter().copied(), rng)];
        }
        pairs.push(z);
        rs.push(rewards[z]);
    }
    Ok(Trajectory { pairs, rewards: rs })
}

/// `count` independent trajectories; trajectory `k` uses RNG stream `k` of
/// `seed`, so any subset can be regenerated (or sampled in parallel) alone.
pub fn sample_trajectories(
    kernel: &StochasticMatrix,
    initial: &[f64],
    rewards: &[f64],
    horizon: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    (0..count)
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            sample_trajectory(kernel, initial, rewards, horizon, &mut rng)
        })
        .collect()
}

/// Empirical visit distribution over `n_pairs`, optionally restricted to the
/// 1-based time steps in `window`.
pub fn occupation_frequencies(batch: &[Trajectory], n_pairs: usize, window: Option<RangeInclusive<usize>>) -> Vec<f64> {
    let mut counts = vec![0u64; n_pairs];
    let mut total = 0u64;
    for tr in batch {
        for (t, &z) in tr.pairs.iter().enumerate() {
            if window.as_ref().is_none_or(|w| w.contains(&(t + 1))) {
                counts[z] += 1;
                total += 1;
            }
        }
    }
    if total == 0 {
        return vec![0.0; n_pairs];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Exact `p(z_t | O_{1:N})` for `t = 1..=N` (index `t - 1`).
///
/// The forward message is `P̃^{t-1} initial`. The backward message at `t` is
/// the probability of staying optimal from step `t` through `N` given
/// `z_t = j`, which is `Σ_k [P̃^{N-t+1}]_{kj}` because the optimality of step
/// `t` itself is weighted by column `j`'s tilt. Both are kept as log-vectors.
pub fn exact_marginals(tilted: &TiltedMatrix, initial: &[f64], horizon: usize) -> Result<Vec<Vec<f64>>> {
    let n = tilted.dim();
    if initial.len() != n {
        return Err(Error::Shape(alloc::format!(
            "initial distribution has {} entries, expected {n}",
            initial.len()
        )));
    }
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1"));
    }
    let op = LogOperator::new(tilted);
    let mut backward = vec![vec![0.0; n]; horizon];
    let mut next = vec![0.0; n];
    for t in (0..horizon).rev() {
        op.apply_left(&next, &mut backward[t]);
        next.clone_from(&backward[t]);
    }
    let mut forward: Vec<f64> = initial.iter().map(|&p| ln(p)).collect();
    let mut out = Vec::with_capacity(horizon);
    let mut buf = vec![0.0; n];
    for (t, b) in backward.iter().enumerate() {
        if t > 0 {
            op.apply_right(&forward, &mut buf);
            core::mem::swap(&mut forward, &mut buf);
        }
        let joint: Vec<f64> = forward.iter().zip(b).map(|(f, b)| f + b).collect();
        let z = log_sum_exp(joint.iter().copied());
        if !z.is_finite() {
            return Err(Error::Underflow { step: t + 1 });
        }
        out.push(joint.iter().map(|l| exp(l - z)).collect());
    }
    Ok(out)
}

/// Bulk time window `[n_star, N - n_star]` (1-based, inclusive), or `None`
/// when it is empty or the gap is unresolved.
pub fn bulk_window(n_star: Option<usize>, horizon: usize) -> Option<RangeInclusive<usize>> {
    let n_star = n_star?.max(1);
    let end = horizon.checked_sub(n_star)?;
    (n_star <= end).then_some(n_star..=end)
}

/// Monte-Carlo rate estimates with their spread across trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalRates {
    /// Per-trajectory `E_τ / N`.
    pub energy: Summary,
    /// Per-trajectory `(1/(N-1)) Σ_t log(q(z_{t+1}|z_t) / p(z_{t+1}|z_t))`.
    pub kl: Summary,
}

/// Energy and relative-entropy rates of `batch`, sampled from `generating`,
/// against `prior`.
pub fn empirical_energy_and_kl(
    batch: &[Trajectory],
    prior: &StochasticMatrix,
    generating: &StochasticMatrix,
) -> Result<EmpiricalRates> {
    let mut energies = Vec::with_capacity(batch.len());
    let mut kls = Vec::with_capacity(batch.len());
    for tr in batch {
        if tr.is_empty() {
            continue;
        }
        energies.push(tr.energy() / tr.len() as f64);
        let mut kl = 0.0;
        for w in tr.pairs.windows(2) {
            let (from, to) = (w[0], w[1]);
            let (q, p) = (generating.get(to, from), prior.get(to, from));
            if p <= 0.0 || q <= 0.0 {
                return Err(Error::AbsoluteContinuity { from, to });
            }
            kl += ln(q) - ln(p);
        }
        kls.push(if tr.len() > 1 { kl / (tr.len() - 1) as f64 } else { 0.0 });
    }
    Ok(EmpiricalRates {
        energy: summarize(&energies),
        kl: summarize(&kls),
    })
}
