use crate::{Result, UccrlError};

const ROW_TOLERANCE: f64 = 1e-12;

/// A finite average-reward MDP: mean rewards and a row-stochastic transition
/// matrix per (state, action). Storage is flattened, `state * num_actions + action`
/// for rewards and the same row index times `num_states` for transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    num_states: usize,
    num_actions: usize,
    rewards: Vec<f64>,
    transitions: Vec<f64>,
}

impl FiniteMdp {
    pub fn new(num_states: usize, num_actions: usize, rewards: Vec<f64>, transitions: Vec<f64>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(UccrlError::arg("an MDP needs at least one state and one action"));
        }
        let pairs = num_states * num_actions;
        if rewards.len() != pairs {
            return Err(UccrlError::arg(format!(
                "expected {pairs} rewards, got {}",
                rewards.len()
            )));
        }
        if transitions.len() != pairs * num_states {
            return Err(UccrlError::arg(format!(
                "expected {} transition entries, got {}",
                pairs * num_states,
                transitions.len()
            )));
        }
        if let Some(r) = rewards.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(UccrlError::arg(format!("reward {r} outside [0,1]")));
        }
        for (row_idx, row) in transitions.chunks(num_states).enumerate() {
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(UccrlError::arg(format!(
                    "transition row {row_idx} has a negative entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(UccrlError::arg(format!(
                    "transition row {row_idx} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            rewards,
            transitions,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[state * self.num_actions + action]
    }

    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        let start = (state * self.num_actions + action) * self.num_states;
        &self.transitions[start..start + self.num_states]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Returns a copy with states permuted: new state `i` is old state `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_states;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(UccrlError::arg("relabeling must be a permutation of the states"));
        }
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let a = self.num_actions;
        let mut rewards = vec![0.0; n * a];
        let mut transitions = vec![0.0; n * a * n];
        for (new, &old) in perm.iter().enumerate() {
            for action in 0..a {
                rewards[new * a + action] = self.reward(old, action);
                let row = self.transition_row(old, action);
                let dst = (new * a + action) * n;
                for (old_next, &p) in row.iter().enumerate() {
                    transitions[dst + inverse[old_next]] = p;
                }
            }
        }
        Self::new(n, a, rewards, transitions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = FiniteMdp::new(2, 1, vec![0.0, 0.0], vec![0.5, 0.6, 1.0, 0.0]).unwrap_err();
        assert!(matches!(err, UccrlError::InvalidArgument(_)));
    }

    #[test]
    fn rejects_rewards_out_of_range() {
        assert!(FiniteMdp::new(1, 1, vec![1.5], vec![1.0]).is_err());
    }

    #[test]
    fn relabel_round_trips() {
        let mdp = FiniteMdp::new(2, 1, vec![0.2, 0.7], vec![0.1, 0.9, 0.4, 0.6]).unwrap();
        let swapped = mdp.relabeled(&[1, 0]).unwrap();
        assert_eq!(swapped.reward(0, 0), 0.7);
        assert_eq!(swapped.transition_row(0, 0), &[0.6, 0.4]);
        assert_eq!(swapped.relabeled(&[1, 0]).unwrap(), mdp);
    }
}
