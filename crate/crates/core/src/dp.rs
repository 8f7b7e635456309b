//! Finite-horizon soft-Bellman dynamic programming.
//!
//! With `N` steps remaining, `βQ_N(s, a) = log p(O_{1:N} | s, a)`, the log
//! probability of staying optimal. The backward recursion
//!
//! > Q_{k+1}(s, a) = r(s, a) + (1/β) log Σ_{s'} p(s'|s, a) exp(β V_k(s')),
//! > β V_k(s) = log Σ_a π(a|s) exp(β Q_k(s, a)),
//!
//! starts from `Q_1 = r` and is evaluated entirely with log-sum-exp, so it is
//! exact in the sense `exp(β Q_N(i)) = Σ_j [P̃ᴺ]_{ji}` without ever forming
//! the (underflowing) linear messages.

use alloc::vec::Vec;

use crate::numeric::{ln, log_sum_exp};
use crate::{Error, MdpModel, Result};

/// Per-step soft value tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    /// `q[k]` holds `Q_{first_step + k}` over pairs.
    pub q: Vec<Vec<f64>>,
    /// `v[k]` holds `V_{first_step + k}` over states.
    pub v: Vec<Vec<f64>>,
    /// Horizon of the first stored table (1 when all tables are kept).
    pub first_step: usize,
    pub horizon: usize,
    pub beta: f64,
}

impl ValueTables {
    /// `Q_N`.
    pub fn last_q(&self) -> &[f64] {
        self.q.last().expect("at least one table")
    }

    /// `V_N`.
    pub fn last_v(&self) -> &[f64] {
        self.v.last().expect("at least one table")
    }

    /// `Q_k` if it was stored.
    pub fn q_at(&self, k: usize) -> Option<&[f64]> {
        k.checked_sub(self.first_step)
            .and_then(|i| self.q.get(i))
            .map(Vec::as_slice)
    }
}

/// `β V(s) = log Σ_a π(a|s) exp(β Q(s, a))` for every state.
pub fn soft_state_values(model: &MdpModel, q: &[f64]) -> Vec<f64> {
    let beta = model.beta();
    let index = model.index();
    (0..model.n_states())
        .map(|s| log_sum_exp(index.state_pairs(s).map(|i| ln(model.policy()[i]) + beta * q[i])) / beta)
        .collect()
}

fn backup_from_values(model: &MdpModel, v: &[f64]) -> Result<Vec<f64>> {
    let beta = model.beta();
    let index = model.index();
    let mut out = Vec::with_capacity(index.len());
    for (i, succ) in model.dynamics().iter().enumerate() {
        let lse = log_sum_exp(
            succ.iter()
                .filter(|&&(_, p)| p > 0.0)
                .map(|&(s, p)| ln(p) + beta * v[s]),
        );
        let q = model.rewards()[i] + lse / beta;
        if !q.is_finite() {
            return Err(Error::Overflow {
                state: index.decode(i).0,
            });
        }
        out.push(q);
    }
    Ok(out)
}

/// One soft-Bellman backup `Q_k → Q_{k+1}`.
pub fn soft_bellman_backup(model: &MdpModel, q_prev: &[f64]) -> Result<Vec<f64>> {
    if q_prev.len() != model.n_pairs() {
        return Err(Error::Shape(alloc::format!(
            "Q table has {} entries, expected {}",
            q_prev.len(),
            model.n_pairs()
        )));
    }
    if let Some(i) = q_prev.iter().position(|q| !q.is_finite()) {
        return Err(Error::Overflow {
            state: model.index().decode(i).0,
        });
    }
    backup_from_values(model, &soft_state_values(model, q_prev))
}

/// Runs the recursion to horizon `N`. With `keep_all` every `Q_k`, `V_k`
/// (`k = 1..=N`) is stored; otherwise only `Q_N`, `V_N`.
pub fn solve_finite_horizon(model: &MdpModel, horizon: usize, keep_all: bool) -> Result<ValueTables> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1"));
    }
    if let Some(pair) = model.rewards().iter().position(|r| !r.is_finite()) {
        return Err(Error::NonFiniteReward { pair });
    }
    let mut q = model.rewards().to_vec();
    let mut v = soft_state_values(model, &q);
    let mut qs = Vec::new();
    let mut vs = Vec::new();
    for _ in 1..horizon {
        let next = backup_from_values(model, &v)?;
        let next_v = soft_state_values(model, &next);
        if keep_all {
            qs.push(core::mem::replace(&mut q, next));
            vs.push(core::mem::replace(&mut v, next_v));
        } else {
            q = next;
            v = next_v;
        }
    }
    qs.push(q);
    vs.push(v);
    Ok(ValueTables {
        q: qs,
        v: vs,
        first_step: if keep_all { 1 } else { horizon },
        horizon,
        beta: model.beta(),
    })
}

/// Agreement statistics between two Q tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub rmsd: f64,
    pub max_abs: f64,
    pub pearson_r: f64,
}

/// RMSD, max absolute deviation and Pearson correlation of `a` against `b`.
///
/// Two constant tables correlate perfectly when equal and not at all
/// otherwise; a constant table against a varying one gives `r = 0`.
pub fn compare_tables(a: &[f64], b: &[f64]) -> Result<Comparison> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(alloc::format!(
            "cannot compare tables of {} and {} entries",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let mut sq = 0.0;
    let mut max_abs: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sq += d * d;
        max_abs = max_abs.max(d.abs());
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let pearson_r = if saa == 0.0 && sbb == 0.0 {
        if max_abs == 0.0 {
            1.0
        } else {
            0.0
        }
    } else if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / libm::sqrt(saa * sbb)
    };
    Ok(Comparison {
        rmsd: libm::sqrt(sq / n),
        max_abs,
        pearson_r,
    })
}

/// Compares `Q_N` from dynamic programming with a spectral Q table at the
/// same horizon.
pub fn compare_with_spectral(dp: &ValueTables, spectral_q: &[f64]) -> Result<Comparison> {
    compare_tables(dp.last_q(), spectral_q)
}
