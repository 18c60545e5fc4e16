use rand::Rng as _;

use super::{bernoulli, interval_mass, EnvState};
use crate::discretize::GridSpec;
use crate::{seeded_rng, Result, Rng, UccrlError};

/// `n_cells` isolated bandits on equal intervals plus a resetting null action.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundEnv {
    grid: GridSpec,
    num_reward_actions: usize,
    epsilon: f64,
    best_cell: usize,
    best_action: usize,
}

impl LowerBoundEnv {
    pub(crate) fn new(n_cells: usize, num_reward_actions: usize, epsilon: f64, seed: u64) -> Result<Self> {
        if n_cells == 0 || num_reward_actions == 0 {
            return Err(UccrlError::arg("need at least one cell and one reward action"));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(UccrlError::arg(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
        }
        let mut rng = seeded_rng(seed);
        let arm = rng.gen_range(0..n_cells * num_reward_actions);
        Ok(Self {
            grid: GridSpec::new(n_cells, 1)?,
            num_reward_actions,
            epsilon,
            best_cell: arm / num_reward_actions,
            best_action: arm % num_reward_actions,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.grid.cells_per_axis()
    }

    pub fn num_reward_actions(&self) -> usize {
        self.num_reward_actions
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn best_cell(&self) -> usize {
        self.best_cell
    }

    pub fn best_action(&self) -> usize {
        self.best_action
    }

    /// Index of the action that pays 0 and resets uniformly.
    pub fn null_action(&self) -> usize {
        self.num_reward_actions
    }

    pub(crate) fn mean_reward(&self, state: &EnvState, action: usize) -> f64 {
        if action == self.null_action() {
            0.0
        } else if action == self.best_action && self.grid.cell_index(state) == self.best_cell {
            0.5 + self.epsilon
        } else {
            0.5
        }
    }

    pub(crate) fn step(&self, state: &EnvState, action: usize, rng: &mut Rng) -> (f64, EnvState) {
        let reward = bernoulli(self.mean_reward(state, action), rng);
        let next = if action == self.null_action() {
            rng.gen::<f64>()
        } else {
            let cell = self.grid.cell_index(state);
            let (lo, hi) = self.grid.axis_interval(cell);
            // Uniform on the cell; redraw the measure-zero left endpoint of
            // left-open cells.
            loop {
                let x = hi - rng.gen::<f64>() * (hi - lo);
                if cell == 0 || x > lo {
                    break x;
                }
            }
        };
        (reward, EnvState::from_unit(vec![next]))
    }

    pub(crate) fn aggregated_kernel(&self, state: &EnvState, action: usize, grid: &GridSpec) -> Vec<f64> {
        let (lo, hi) = if action == self.null_action() {
            (0.0, 1.0)
        } else {
            self.grid.axis_interval(self.grid.cell_index(state))
        };
        (0..grid.num_cells())
            .map(|c| {
                let (a, b) = grid.axis_interval(c);
                interval_mass(lo, hi, a, b)
            })
            .collect()
    }
}
