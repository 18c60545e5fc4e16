#![allow(dead_code)]

use rand::Rng as _;
use uccrl::{FiniteMdp, Rng};

/// Random probability vector with strictly positive entries.
pub fn random_distribution(rng: &mut Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}

/// Random probability vector, possibly with exact zeros.
pub fn random_sparse_distribution(rng: &mut Rng, k: usize) -> Vec<f64> {
    let keep = rng.gen_range(0..k);
    let raw: Vec<f64> = (0..k)
        .map(|j| {
            if j == keep || rng.gen_bool(0.6) {
                rng.gen::<f64>() + 1e-3
            } else {
                0.0
            }
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}

/// Dense random MDP: every policy is ergodic and aperiodic.
pub fn random_mdp(rng: &mut Rng, states: usize, actions: usize) -> FiniteMdp {
    let rewards = (0..states * actions).map(|_| rng.gen::<f64>()).collect();
    let transitions = (0..states * actions)
        .flat_map(|_| random_distribution(rng, states))
        .collect();
    FiniteMdp::new(states, actions, rewards, transitions).unwrap()
}

/// Transition matrix of a fixed policy, row-major.
pub fn policy_matrix(mdp: &FiniteMdp, policy: &[usize]) -> Vec<Vec<f64>> {
    (0..mdp.num_states())
        .map(|s| mdp.transition_row(s, policy[s]).to_vec())
        .collect()
}

/// Samples an index from a probability vector.
pub fn sample(rng: &mut Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap()
}
