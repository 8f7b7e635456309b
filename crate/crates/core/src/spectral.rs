//! Perron triplet of the tilted matrix and the spectral-gap diagnostics.
//!
//! For a primitive tilted matrix `P̃` the dominant eigenvalue `ρ` is simple
//! with strictly positive left and right eigenvectors `u`, `v`, normalized so
//! that `Σ v = 1` and `Σ u v = 1`. Then `P̃ᴺ[j, i] ≈ ρᴺ v_j u_i` for large
//! `N`, with corrections decaying like `(|λ₂| / ρ)ᴺ`.
//!
//! # Algorithm
//!
//! Both eigenvectors are found by power iteration carried out entirely in log
//! space: a matrix-vector product becomes a log-sum-exp per entry, so vectors
//! spanning hundreds of orders of magnitude (typical at β ≳ 50) stay
//! representable. Each step is damped,
//!
//! > x ← ½ (P̃x / ρₖ + x),
//!
//! which is a power iteration on `P̃ + ρₖ I`. The shift leaves eigenvectors
//! untouched but moves the near-periodic eigenvalues `ρ ωᵏ` that appear when
//! one cycle dominates the dynamics (long corridors at low temperature) away
//! from the unit circle, so convergence never stalls on them.
//!
//! Convergence requires the per-entry log residual `max |log(P̃x)_i - log ρ -
//! log x_i|` and the change in `log ρ` to both fall below `tol`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::numeric::{exp, log, log_add_exp, log_normalize, log_sum_exp};
use crate::validate::primitivity;
use crate::{stream_rng, Error, Result, TiltedMatrix};

/// Entries of `u` below this floor (in linear scale relative to the
/// normalization) are treated as degenerate.
pub const LOG_POSITIVITY_FLOOR: f64 = -690.7755278982137; // ln(1e-300)

/// Horizon criterion: `n_star` is the first `n` with `exp(-n β(ξ-θ)) ≤ 1e-6`.
pub const LONG_TIME_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// When set, the all-ones start vector is perturbed by a positive random
    /// factor drawn from this seed.
    pub seed: Option<u64>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
            seed: None,
        }
    }
}

/// Dominant eigen-triplet of a tilted matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub beta: f64,
    pub rho: f64,
    pub log_rho: f64,
    /// Bulk free energy per step, `ρ = exp(-βθ)`.
    pub theta: f64,
    /// `log u`, with `Σ exp(log_u + log_v) = 1`.
    pub log_u: Vec<f64>,
    /// `log v`, with `Σ exp(log_v) = 1`.
    pub log_v: Vec<f64>,
    pub iterations: usize,
    /// `max(‖P̃ᵀu/ρ - u‖∞ / ‖u‖∞, ‖P̃v/ρ - v‖∞ / ‖v‖∞)`.
    pub residual: f64,
}

impl SpectralSolution {
    pub fn len(&self) -> usize {
        self.log_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_u.is_empty()
    }

    /// Left eigenvector in linear scale (tiny entries may underflow).
    pub fn u(&self) -> Vec<f64> {
        self.log_u.iter().map(|&x| exp(x)).collect()
    }

    /// Right eigenvector (quasi-stationary distribution) in linear scale.
    pub fn v(&self) -> Vec<f64> {
        self.log_v.iter().map(|&x| exp(x)).collect()
    }

    /// Returns a copy with `u` rescaled by `c > 0`, breaking the `Σ u v = 1`
    /// normalization. Everything derived from `u` alone (policy, dynamics,
    /// driven matrix) is invariant under this gauge.
    pub fn with_u_scaled(&self, c: f64) -> Self {
        let lc = log(c);
        Self {
            log_u: self.log_u.iter().map(|x| x + lc).collect(),
            ..self.clone()
        }
    }
}

/// `θ = -log(ρ) / β`.
pub fn theta_from_rho(rho: f64, beta: f64) -> Result<f64> {
    if !(rho > 0.0) || rho > 1.0 + 1e-12 {
        return Err(Error::Domain("rho must lie in (0, 1]"));
    }
    if !(beta > 0.0) {
        return Err(Error::Domain("beta must be positive"));
    }
    Ok(theta_from_log_rho(log(rho), beta))
}

pub(crate) fn theta_from_log_rho(log_rho: f64, beta: f64) -> f64 {
    // ρ may exceed 1 by rounding when all rewards are zero
    if log_rho >= 0.0 {
        0.0
    } else {
        -log_rho / beta
    }
}

/// Log-domain view of `P̃` with both column and row access.
pub(crate) struct LogOperator {
    n: usize,
    weight: Vec<f64>,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_logp: Vec<f64>,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_logp: Vec<f64>,
}

impl LogOperator {
    pub(crate) fn new(tilted: &TiltedMatrix) -> Self {
        let p = tilted.prior().matrix();
        let n = p.dim();
        let weight = (0..n).map(|i| tilted.log_weight(i)).collect();
        let mut col_ptr = vec![0];
        let mut col_rows = Vec::with_capacity(p.nnz());
        let mut col_logp = Vec::with_capacity(p.nnz());
        for i in 0..n {
            let (rows, vals) = p.column(i);
            col_rows.extend_from_slice(rows);
            col_logp.extend(vals.iter().map(|&a| log(a)));
            col_ptr.push(col_rows.len());
        }
        let t = p.transpose();
        let mut row_ptr = vec![0];
        let mut row_cols = Vec::with_capacity(p.nnz());
        let mut row_logp = Vec::with_capacity(p.nnz());
        for j in 0..n {
            let (cols, vals) = t.column(j);
            row_cols.extend_from_slice(cols);
            row_logp.extend(vals.iter().map(|&a| log(a)));
            row_ptr.push(row_cols.len());
        }
        Self {
            n,
            weight,
            col_ptr,
            col_rows,
            col_logp,
            row_ptr,
            row_cols,
            row_logp,
        }
    }

    /// `log (P̃ x)` from `log x`.
    pub(crate) fn apply_right(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let range = self.row_ptr[j]..self.row_ptr[j + 1];
            let terms = self.row_cols[range.clone()]
                .iter()
                .zip(&self.row_logp[range])
                .map(|(&i, &lp)| lp + self.weight[i] + x[i]);
            *o = log_sum_exp(terms);
        }
    }

    /// `log (P̃ᵀ x)` from `log x`.
    pub(crate) fn apply_left(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let range = self.col_ptr[i]..self.col_ptr[i + 1];
            let terms = self.col_rows[range.clone()]
                .iter()
                .zip(&self.col_logp[range])
                .map(|(&j, &lp)| lp + x[j]);
            *o = self.weight[i] + log_sum_exp(terms);
        }
    }
}

struct PowerResult {
    log_x: Vec<f64>,
    iterations: usize,
}

fn log_power_iteration(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    mut x: Vec<f64>,
    cfg: &PowerConfig,
) -> Result<PowerResult> {
    const LN_2: f64 = core::f64::consts::LN_2;
    log_normalize(&mut x);
    let mut y = vec![0.0; n];
    let mut prev_log_rho = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        apply(&x, &mut y);
        // x sums to one, so the ratio of sums is log-sum of the image
        let log_rho = log_sum_exp(y.iter().copied());
        residual = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - log_rho - xi).abs())
            .fold(0.0, f64::max);
        let rho_change = (log_rho - prev_log_rho).abs();
        if residual <= cfg.tol && rho_change <= cfg.tol {
            return Ok(PowerResult {
                log_x: x,
                iterations: it,
            });
        }
        prev_log_rho = log_rho;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = log_add_exp(yi - log_rho, *xi) - LN_2;
        }
        log_normalize(&mut x);
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iter,
        residual,
    })
}

/// Scaled max-norm residual `‖A x / ρ - x‖∞ / ‖x‖∞` from log vectors.
fn scaled_residual(log_ax: &[f64], log_rho: f64, log_x: &[f64]) -> f64 {
    let m = log_x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    log_ax
        .iter()
        .zip(log_x)
        .map(|(a, x)| (exp(a - log_rho - m) - exp(x - m)).abs())
        .fold(0.0, f64::max)
}

fn start_vector(n: usize, seed: Option<u64>) -> Vec<f64> {
    match seed {
        None => vec![0.0; n],
        Some(seed) => {
            let mut rng = stream_rng(seed, 0);
            (0..n).map(|_| log(1.0 + rng.random::<f64>())).collect()
        }
    }
}

/// Perron triplet `(ρ, u, v)` of `tilted` by log-domain power iteration.
pub fn dominant_triplet(tilted: &TiltedMatrix, cfg: &PowerConfig) -> Result<SpectralSolution> {
    if !(cfg.tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive"));
    }
    let shape = primitivity(tilted.prior().matrix());
    if !shape.is_primitive() {
        return Err(Error::NotPrimitive {
            irreducible: shape.irreducible,
            period: shape.period,
        });
    }
    let op = LogOperator::new(tilted);
    let n = op.n;
    let right = log_power_iteration(n, |x, out| op.apply_right(x, out), start_vector(n, cfg.seed), cfg)?;
    let left = log_power_iteration(
        n,
        |x, out| op.apply_left(x, out),
        start_vector(n, cfg.seed.map(|s| s ^ 0x5eed)),
        cfg,
    )?;

    let mut log_v = right.log_x;
    log_normalize(&mut log_v);
    let mut log_u = left.log_x;
    let z = log_sum_exp(log_u.iter().zip(&log_v).map(|(a, b)| a + b));
    log_u.iter_mut().for_each(|x| *x -= z);

    let mut image = vec![0.0; n];
    op.apply_right(&log_v, &mut image);
    let log_rho = log_sum_exp(image.iter().copied());
    let res_v = scaled_residual(&image, log_rho, &log_v);
    op.apply_left(&log_u, &mut image);
    let res_u = scaled_residual(&image, log_rho, &log_u);

    if let Some(pair) = log_u.iter().chain(&log_v).position(|x| !x.is_finite()) {
        return Err(Error::DegenerateEigenvector { pair: pair % n });
    }

    let beta = tilted.beta();
    Ok(SpectralSolution {
        beta,
        rho: exp(log_rho),
        log_rho,
        theta: theta_from_log_rho(log_rho, beta),
        log_u,
        log_v,
        iterations: right.iterations.max(left.iterations),
        residual: res_u.max(res_v),
    })
}

/// Subdominant-mode diagnostics of the tilted matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEstimate {
    /// `|λ₂| / ρ = exp(-β(ξ - θ))`.
    pub subdominant_ratio: f64,
    /// `β(ξ - θ)`; `+inf` when there is no subdominant mode.
    pub xi_gap: f64,
    /// Smallest horizon with `exp(-n β(ξ-θ)) ≤ 1e-6`; `None` when the gap is
    /// too small to resolve.
    pub n_star: Option<usize>,
    pub iterations: usize,
    /// Whether successive window estimates settled before `max_iter`.
    pub converged: bool,
}

impl GapEstimate {
    pub fn gap_too_small(&self) -> bool {
        self.n_star.is_none()
    }
}

/// Gaps at or below this are reported as unresolvable.
pub const MIN_RESOLVABLE_GAP: f64 = 1e-6;

fn gap_from_ratio(ratio: f64, iterations: usize, converged: bool) -> GapEstimate {
    let xi_gap = if ratio <= 0.0 { f64::INFINITY } else { -log(ratio) };
    let n_star = if xi_gap <= MIN_RESOLVABLE_GAP {
        None
    } else {
        let n = libm::ceil(-log(LONG_TIME_THRESHOLD) / xi_gap);
        Some((n as usize).max(1))
    };
    GapEstimate {
        subdominant_ratio: ratio.max(0.0),
        xi_gap,
        n_star,
        iterations,
        converged,
    }
}

/// Estimates `|λ₂| / ρ` by deflated power iteration.
///
/// The iteration runs on the driven matrix `P_d = D_u P̃ D_u⁻¹ / ρ`, which is
/// similar to `P̃ / ρ` (same spectrum) but column-stochastic and therefore
/// well scaled at any β. Its Perron pair is `(1, u ⊙ v)` with left vector
/// `1ᵀ`, so deflation is the projection `x ← x - (u⊙v)(1ᵀx)` onto zero-sum
/// vectors. The growth rate of `‖x‖` is averaged over windows of 256 steps,
/// which also handles complex subdominant pairs.
pub fn spectral_gap(tilted: &TiltedMatrix, sol: &SpectralSolution, max_iter: usize, seed: u64) -> Result<GapEstimate> {
    const WINDOW: usize = 256;
    const REL_TOL: f64 = 1e-3;
    const ZERO_RATIO: f64 = 1e-13;

    let driven = crate::driven::driven_matrix(tilted, sol)?;
    let pd = driven.matrix.matrix();
    let n = pd.dim();
    if n < 2 {
        return Ok(gap_from_ratio(0.0, 0, true));
    }
    let steady = crate::driven::steady_state_distribution(sol);

    let project = |x: &mut [f64]| {
        let s: f64 = x.iter().sum();
        for (xi, pi) in x.iter_mut().zip(&steady) {
            *xi -= pi * s;
        }
    };
    let norm = |x: &[f64]| libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());

    let mut rng = stream_rng(seed, 1);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    project(&mut x);
    let nx = norm(&x);
    if nx == 0.0 {
        return Ok(gap_from_ratio(0.0, 0, true));
    }
    x.iter_mut().for_each(|v| *v /= nx);

    let mut window_log_growth = 0.0;
    let mut previous: Option<f64> = None;
    for it in 1..=max_iter {
        let mut y = pd.mul_vec(&x);
        project(&mut y);
        let ny = norm(&y);
        if ny <= ZERO_RATIO {
            return Ok(gap_from_ratio(0.0, it, true));
        }
        window_log_growth += log(ny);
        y.iter_mut().for_each(|v| *v /= ny);
        x = y;
        if it % WINDOW == 0 {
            let estimate = exp(window_log_growth / WINDOW as f64);
            window_log_growth = 0.0;
            if let Some(prev) = previous {
                if (estimate - prev).abs() <= REL_TOL * estimate.max(f64::MIN_POSITIVE) {
                    return Ok(gap_from_ratio(estimate.min(1.0), it, true));
                }
            }
            previous = Some(estimate);
        }
    }
    let estimate = previous.unwrap_or(1.0);
    Ok(gap_from_ratio(estimate.min(1.0), max_iter, false))
}
