//! Optimistic reinforcement learning for undiscounted, continuous-state MDPs.
//!
//! The state space `[0,1]^d` is aggregated into a uniform grid. Per-cell
//! statistics feed confidence sets around the aggregated rewards and
//! transition laws, and an optimistic policy is computed on the aggregated
//! MDP with extended value iteration. Episodes end when the visit count of
//! some (cell, action) pair doubles.
//!
//! Modules:
//! - [`envs`]: continuous-state environments with known regularity.
//! - [`discretize`]: the grid, visit statistics and empirical estimates.
//! - [`optimism`]: confidence sets and extended value iteration.
//! - [`agent`]: the episodic control loop and its anytime wrapper.
//! - [`eval`]: exact oracles (Poisson equation, brute-force gain, Hölder checks).
//! - [`cli`]: the experiment harness behind the `uccrl` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod cli;
pub mod discretize;
pub mod envs;
mod error;
pub mod eval;
mod linalg;
pub mod mdp;
pub mod optimism;

pub use error::{Result, UccrlError};
pub use mdp::FiniteMdp;

/// Seeded generator used for every stochastic component.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate's generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
