//! Small numeric kernels shared across modules: log-sum-exp, normalization
//! and summary statistics.

use alloc::vec::Vec;

pub use libm::{exp, expm1, log, log1p};

/// `log Σ exp(x)` over an iterator, stable for arbitrarily negative inputs.
/// Returns `-inf` for an empty (or all `-inf`) input.
pub fn log_sum_exp<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    let sum: f64 = iter.map(|x| exp(x - max)).sum();
    max + log(sum)
}

/// `log(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + log1p(exp(lo - hi))
}

/// Natural log that maps zero to `-inf` (and negative input to NaN).
pub fn ln(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        log(x)
    }
}

/// Shifts `log_values` in place so that `Σ exp(log_values) = 1`; returns the
/// removed normalizer.
pub fn log_normalize(log_values: &mut [f64]) -> f64 {
    let z = log_sum_exp(log_values.iter().copied());
    for x in log_values.iter_mut() {
        *x -= z;
    }
    z
}

/// Converts log-weights into a normalized probability vector.
pub fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(log_weights.iter().copied());
    log_weights.iter().map(|&w| exp(w - z)).collect()
}

/// Sum of a slice with Neumaier compensation; used where totals are compared
/// against 1 at 1e-12.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in values {
        let t = sum + x;
        if libm::fabs(sum) >= libm::fabs(x) {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Kullback-Leibler divergence `Σ p log(p/q)`. Terms with `p = 0` contribute
/// zero; `q = 0` where `p > 0` yields `+inf`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| {
            if qi <= 0.0 {
                f64::INFINITY
            } else {
                pi * (log(pi) - log(qi))
            }
        })
        .sum()
}

/// Mean, sample standard deviation and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
    pub count: usize,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            std_dev: f64::NAN,
            std_err: f64::NAN,
            count: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let std_dev = libm::sqrt(var);
    Summary {
        mean,
        std_dev,
        std_err: std_dev / libm::sqrt(n as f64),
        count: n,
    }
}
