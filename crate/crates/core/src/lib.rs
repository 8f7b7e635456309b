//! Entropy-regularized reinforcement learning on tabular MDPs, solved through
//! large-deviation spectral methods.
//!
//! The pipeline runs over state-action pairs `z = (s, a)`:
//!
//! 1. [`mdp`] composes the prior transition matrix `P[j, i] = p(s'|s, a) π(a'|s')`
//!    and tilts each source column by `exp(β r_i)`. The tilted matrix is
//!    sub-stochastic; the missing mass is the probability of leaving the
//!    "optimal" trajectory set, made explicit by an absorbing state in the
//!    extended matrix.
//! 2. [`spectral`] finds the Perron triplet `(ρ, u, v)` of the tilted matrix,
//!    with `ρ = exp(-βθ)`. Eigenvectors are carried in log space so that
//!    strongly tilted problems (large β) never underflow.
//! 3. [`driven`] turns the triplet into the optimal controlled process: the
//!    Doob-transformed driven matrix, optimal policy, optimal dynamics,
//!    initial distribution, steady state `u ⊙ v` and soft value functions.
//! 4. [`dp`] is an independent finite-horizon soft-Bellman solver, and
//!    [`utheta`] a model-free learner of `(u, θ)` from sampled transitions.
//! 5. [`gridworld`] and [`sim`] provide FrozenLake-style environments,
//!    trajectory sampling and exact finite-horizon marginals.
//!
//! Matrices are column-oriented throughout: column `i` is the source pair,
//! row `j` the destination pair, so every stochastic matrix has unit column
//! sums.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is the NaN-rejecting form, used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dp;
pub mod driven;
mod error;
pub mod gridworld;
pub mod matrix;
pub mod mdp;
pub mod numeric;
pub mod pair;
pub mod sim;
pub mod spectral;
pub mod utheta;
pub mod validate;

pub use error::{Error, Result};
pub use matrix::{CscMatrix, StochasticMatrix};
pub use mdp::{ExtendedMatrix, MdpModel, TiltedMatrix};
pub use pair::PairIndex;
pub use spectral::{GapEstimate, PowerConfig, SpectralSolution};

/// Deterministic RNG used by every sampling routine in the crate.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Seeds an RNG on an independent stream, one per replica or trajectory.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    use rand::SeedableRng;
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
