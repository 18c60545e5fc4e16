//! Uniform aggregation of `[0,1]^d` and the per-(cell, action) statistics
//! the agent learns from.
//!
//! Along each axis the cells are `[0, 1/n]` followed by `((j-1)/n, j/n]`.
//! Cells of a d-dimensional grid are products of axis intervals, indexed
//! row-major with the first coordinate most significant. Indices are 0-based.

use std::fmt::Write as _;

use crate::envs::EnvState;
use crate::{Result, UccrlError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    n: usize,
    dimension: usize,
    num_cells: usize,
}

impl GridSpec {
    pub fn new(cells_per_axis: usize, dimension: usize) -> Result<Self> {
        if cells_per_axis == 0 || dimension == 0 {
            return Err(UccrlError::arg("grid needs n >= 1 and d >= 1"));
        }
        let num_cells = u32::try_from(dimension)
            .ok()
            .and_then(|d| cells_per_axis.checked_pow(d))
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| UccrlError::TooLarge(format!("{cells_per_axis}^{dimension} cells")))?;
        Ok(Self {
            n: cells_per_axis,
            dimension,
            num_cells,
        })
    }

    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    /// Euclidean diameter of a cell, `sqrt(d) / n`.
    pub fn cell_diameter(&self) -> f64 {
        (self.dimension as f64).sqrt() / self.n as f64
    }

    /// Index of the axis interval containing `x`. Exact at the boundaries
    /// `j/n`: the sign of `x*n - j` is computed with a single rounding.
    pub fn axis_index(&self, x: f64) -> usize {
        let n = self.n as f64;
        if x <= 0.0 {
            return 0;
        }
        // Cell j (0-based) is ((j)/n, (j+1)/n], so the answer is ceil(x n) - 1.
        let mut j = ((x * n).ceil() as usize).clamp(1, self.n);
        while j > 1 && x.mul_add(n, -((j - 1) as f64)) <= 0.0 {
            j -= 1;
        }
        while j < self.n && x.mul_add(n, -(j as f64)) > 0.0 {
            j += 1;
        }
        j - 1
    }

    pub fn cell_index(&self, state: &EnvState) -> usize {
        state
            .coords()
            .iter()
            .fold(0, |acc, &x| acc * self.n + self.axis_index(x))
    }

    /// Per-axis interval indices of `cell`.
    pub fn cell_coords(&self, cell: usize) -> Vec<usize> {
        let mut coords = vec![0; self.dimension];
        let mut rest = cell;
        for slot in coords.iter_mut().rev() {
            *slot = rest % self.n;
            rest /= self.n;
        }
        coords
    }

    /// Closure of the j-th axis interval, `[j/n, (j+1)/n]`.
    pub fn axis_interval(&self, j: usize) -> (f64, f64) {
        let n = self.n as f64;
        (j as f64 / n, (j + 1) as f64 / n)
    }

    pub fn cell_center(&self, cell: usize) -> EnvState {
        let n = self.n as f64;
        EnvState::from_unit(
            self.cell_coords(cell)
                .into_iter()
                .map(|j| (j as f64 + 0.5) / n)
                .collect(),
        )
    }

    /// Center of `cell` plus its corners pulled inward by a relative 1e-9, so
    /// that every probe maps back to `cell`.
    pub fn cell_probe_points(&self, cell: usize) -> Vec<EnvState> {
        let coords = self.cell_coords(cell);
        let center = self.cell_center(cell);
        let mut points = vec![center.clone()];
        for mask in 0..(1usize << self.dimension) {
            let corner = coords
                .iter()
                .enumerate()
                .map(|(i, &j)| {
                    let (lo, hi) = self.axis_interval(j);
                    let edge = if mask >> i & 1 == 1 { hi } else { lo };
                    let c = center.coords()[i];
                    c + (edge - c) * (1.0 - 1e-9)
                })
                .collect();
            points.push(EnvState::from_unit(corner));
        }
        points
    }
}

/// Visit statistics per (cell, action). `prior` counts samples before the
/// current episode, `in_episode` the samples of the current episode.
#[derive(Debug, Clone, PartialEq)]
pub struct AggStats {
    num_cells: usize,
    num_actions: usize,
    prior: Vec<u64>,
    in_episode: Vec<u64>,
    reward_sum: Vec<f64>,
    trans_count: Vec<u64>,
    t: u64,
    episode: u64,
    episode_start: u64,
}

impl AggStats {
    /// Empty statistics with `t = 1` and no episode started yet.
    pub fn new(grid: &GridSpec, num_actions: usize) -> Self {
        let pairs = grid.num_cells() * num_actions;
        Self {
            num_cells: grid.num_cells(),
            num_actions,
            prior: vec![0; pairs],
            in_episode: vec![0; pairs],
            reward_sum: vec![0.0; pairs],
            trans_count: vec![0; pairs * grid.num_cells()],
            t: 1,
            episode: 0,
            episode_start: 1,
        }
    }

    fn pair(&self, cell: usize, action: usize) -> usize {
        cell * self.num_actions + action
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Samples of (cell, action) before the current episode.
    pub fn prior_count(&self, cell: usize, action: usize) -> u64 {
        self.prior[self.pair(cell, action)]
    }

    /// Samples of (cell, action) in the current episode.
    pub fn episode_count(&self, cell: usize, action: usize) -> u64 {
        self.in_episode[self.pair(cell, action)]
    }

    pub fn reward_sum(&self, cell: usize, action: usize) -> f64 {
        self.reward_sum[self.pair(cell, action)]
    }

    pub fn transition_counts(&self, cell: usize, action: usize) -> &[u64] {
        let start = self.pair(cell, action) * self.num_cells;
        &self.trans_count[start..start + self.num_cells]
    }

    /// Current time step; the next action is taken at step `t`.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    /// Step at which the current episode started.
    pub fn episode_start(&self) -> u64 {
        self.episode_start
    }

    /// Whether the episode must end before acting with `action` in `cell`:
    /// its in-episode count has reached `max(1, prior count)`.
    pub fn doubling_reached(&self, cell: usize, action: usize) -> bool {
        let pair = self.pair(cell, action);
        self.in_episode[pair] >= self.prior[pair].max(1)
    }

    pub fn record_transition(
        &mut self,
        grid: &GridSpec,
        state: &EnvState,
        action: usize,
        reward: f64,
        next: &EnvState,
    ) -> Result<()> {
        if action >= self.num_actions {
            return Err(UccrlError::arg(format!("action {action} out of range")));
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(UccrlError::arg(format!("reward {reward} outside [0,1]")));
        }
        let from = grid.cell_index(state);
        let to = grid.cell_index(next);
        let pair = self.pair(from, action);
        self.in_episode[pair] += 1;
        self.reward_sum[pair] += reward;
        self.trans_count[pair * self.num_cells + to] += 1;
        self.t += 1;
        Ok(())
    }

    /// Folds the in-episode counts into the prior counts and starts a new
    /// episode at the current step.
    pub fn close_episode(&mut self) {
        for (n, v) in self.prior.iter_mut().zip(self.in_episode.iter_mut()) {
            *n += std::mem::take(v);
        }
        self.episode += 1;
        self.episode_start = self.t;
    }

    /// Empirical reward means and aggregated transition frequencies over all
    /// samples recorded so far. Unvisited pairs get `r = 0` and a uniform row.
    pub fn compute_estimates(&self) -> AggEstimates {
        let pairs = self.num_cells * self.num_actions;
        let mut r_hat = vec![0.0; pairs];
        let mut p_hat = vec![1.0 / self.num_cells as f64; pairs * self.num_cells];
        for pair in 0..pairs {
            let total = self.prior[pair] + self.in_episode[pair];
            if total == 0 {
                continue;
            }
            r_hat[pair] = (self.reward_sum[pair] / total as f64).clamp(0.0, 1.0);
            let row = &mut p_hat[pair * self.num_cells..(pair + 1) * self.num_cells];
            let counts = &self.trans_count[pair * self.num_cells..(pair + 1) * self.num_cells];
            for (p, &c) in row.iter_mut().zip(counts) {
                *p = c as f64 / total as f64;
            }
        }
        AggEstimates {
            num_cells: self.num_cells,
            num_actions: self.num_actions,
            r_hat,
            p_hat,
        }
    }

    /// Tab-separated dump of visited pairs: cell, action, N, v, reward sum,
    /// then one column per destination cell.
    pub fn to_columnar_text(&self) -> String {
        let mut out = String::from("cell\taction\tN\tv\treward_sum");
        for c in 0..self.num_cells {
            let _ = write!(out, "\tto_{c}");
        }
        out.push('\n');
        for cell in 0..self.num_cells {
            for action in 0..self.num_actions {
                let pair = self.pair(cell, action);
                if self.prior[pair] + self.in_episode[pair] == 0 {
                    continue;
                }
                let _ = write!(
                    out,
                    "{cell}\t{action}\t{}\t{}\t{}",
                    self.prior[pair], self.in_episode[pair], self.reward_sum[pair]
                );
                for c in self.transition_counts(cell, action) {
                    let _ = write!(out, "\t{c}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Per-(cell, action) reward means and aggregated transition rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AggEstimates {
    num_cells: usize,
    num_actions: usize,
    r_hat: Vec<f64>,
    p_hat: Vec<f64>,
}

impl AggEstimates {
    /// Estimates taken directly from a finite MDP (exact knowledge).
    pub fn from_mdp(mdp: &crate::FiniteMdp) -> Self {
        Self {
            num_cells: mdp.num_states(),
            num_actions: mdp.num_actions(),
            r_hat: mdp.rewards().to_vec(),
            p_hat: mdp.transitions().to_vec(),
        }
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn r_hat(&self, cell: usize, action: usize) -> f64 {
        self.r_hat[cell * self.num_actions + action]
    }

    pub fn p_hat(&self, cell: usize, action: usize) -> &[f64] {
        let start = (cell * self.num_actions + action) * self.num_cells;
        &self.p_hat[start..start + self.num_cells]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn s(x: f64) -> EnvState {
        EnvState::scalar(x).unwrap()
    }

    #[test]
    fn half_open_boundaries() {
        let g = GridSpec::new(4, 1).unwrap();
        assert_eq!(g.cell_index(&s(0.0)), 0);
        assert_eq!(g.cell_index(&s(0.25)), 0);
        assert_eq!(g.cell_index(&s(0.25 + 1e-12)), 1);
        assert_eq!(g.cell_index(&s(0.5)), 1);
        assert_eq!(g.cell_index(&s(1.0)), 3);
    }

    #[test]
    fn boundary_exactness_with_inexact_products() {
        // 0.3 * 10 rounds up to 3.0000000000000004 but the double 0.3 lies
        // below 3/10, so it belongs to the third cell.
        let g = GridSpec::new(10, 1).unwrap();
        assert_eq!(g.axis_index(0.3), 2);
        let g = GridSpec::new(3, 1).unwrap();
        assert_eq!(g.axis_index(1.0 / 3.0), 0);
        assert_eq!(g.axis_index(2.0 / 3.0), 1);
    }

    #[test]
    fn row_major_cells() {
        let g = GridSpec::new(4, 2).unwrap();
        assert_eq!(g.num_cells(), 16);
        let st = EnvState::new(vec![0.3, 0.9]).unwrap();
        assert_eq!(g.cell_index(&st), 4 + 3);
        assert_eq!(g.cell_coords(7), vec![1, 3]);
        assert!((g.cell_diameter() - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn center_round_trip() {
        let g = GridSpec::new(7, 3).unwrap();
        for c in 0..g.num_cells() {
            assert_eq!(g.cell_index(&g.cell_center(c)), c);
        }
    }

    #[test]
    fn probe_points_stay_in_cell() {
        let g = GridSpec::new(3, 2).unwrap();
        for c in 0..g.num_cells() {
            let probes = g.cell_probe_points(c);
            assert_eq!(probes.len(), 5);
            assert!(probes.iter().all(|p| g.cell_index(p) == c));
        }
    }

    #[test]
    fn oversized_grid_is_rejected() {
        assert!(matches!(GridSpec::new(1000, 4), Err(UccrlError::TooLarge(_))));
    }

    #[test]
    fn single_transition_bookkeeping() {
        let g = GridSpec::new(2, 1).unwrap();
        let mut st = AggStats::new(&g, 1);
        st.record_transition(&g, &s(0.1), 0, 1.0, &s(0.9)).unwrap();
        assert_eq!(st.episode_count(0, 0), 1);
        assert_eq!(st.reward_sum(0, 0), 1.0);
        assert_eq!(st.transition_counts(0, 0), &[0, 1]);
        assert_eq!(st.t(), 2);
        st.record_transition(&g, &s(0.2), 0, 0.0, &s(0.3)).unwrap();
        assert_eq!(st.episode_count(0, 0), 2);
        assert_eq!(st.transition_counts(0, 0), &[1, 1]);
    }

    #[test]
    fn close_episode_folds_counts() {
        let g = GridSpec::new(2, 1).unwrap();
        let mut st = AggStats::new(&g, 1);
        for _ in 0..3 {
            st.record_transition(&g, &s(0.1), 0, 1.0, &s(0.1)).unwrap();
        }
        st.close_episode();
        for _ in 0..3 {
            st.record_transition(&g, &s(0.1), 0, 1.0, &s(0.9)).unwrap();
        }
        assert_eq!((st.prior_count(0, 0), st.episode_count(0, 0)), (3, 3));
        st.close_episode();
        assert_eq!((st.prior_count(0, 0), st.episode_count(0, 0)), (6, 0));
        assert_eq!(st.transition_counts(0, 0).iter().sum::<u64>(), 6);
        assert_eq!(st.episode(), 2);
        assert_eq!(st.episode_start(), 7);
        st.close_episode();
        assert_eq!(st.prior_count(0, 0), 6);
        assert_eq!(st.episode(), 3);
    }

    #[test]
    fn estimates_are_sample_means() {
        let g = GridSpec::new(2, 1).unwrap();
        let mut st = AggStats::new(&g, 2);
        st.record_transition(&g, &s(0.1), 0, 1.0, &s(0.1)).unwrap();
        st.record_transition(&g, &s(0.1), 0, 0.5, &s(0.9)).unwrap();
        st.record_transition(&g, &s(0.1), 0, 0.0, &s(0.9)).unwrap();
        st.record_transition(&g, &s(0.1), 0, 1.0, &s(0.9)).unwrap();
        st.close_episode();
        let est = st.compute_estimates();
        assert_eq!(est.r_hat(0, 0), 0.625);
        assert_eq!(est.p_hat(0, 0), &[0.25, 0.75]);
        // unvisited pair
        assert_eq!(est.r_hat(1, 1), 0.0);
        assert_eq!(est.p_hat(1, 1), &[0.5, 0.5]);
    }

    #[test]
    fn two_sample_mean() {
        let g = GridSpec::new(1, 1).unwrap();
        let mut st = AggStats::new(&g, 1);
        st.record_transition(&g, &s(0.1), 0, 1.0, &s(0.1)).unwrap();
        st.record_transition(&g, &s(0.1), 0, 0.5, &s(0.1)).unwrap();
        st.close_episode();
        assert_eq!(st.compute_estimates().r_hat(0, 0), 0.75);
    }

    #[test]
    fn doubling_rule_uses_floor_of_one() {
        let g = GridSpec::new(1, 1).unwrap();
        let mut st = AggStats::new(&g, 1);
        st.close_episode();
        assert!(!st.doubling_reached(0, 0));
        st.record_transition(&g, &s(0.5), 0, 0.0, &s(0.5)).unwrap();
        assert!(st.doubling_reached(0, 0));
    }

    #[test]
    fn rejects_bad_reward() {
        let g = GridSpec::new(1, 1).unwrap();
        let mut st = AggStats::new(&g, 1);
        assert!(st.record_transition(&g, &s(0.5), 0, 1.5, &s(0.5)).is_err());
    }

    #[test]
    fn columnar_dump_lists_visited_pairs() {
        let g = GridSpec::new(2, 1).unwrap();
        let mut st = AggStats::new(&g, 2);
        st.record_transition(&g, &s(0.9), 1, 1.0, &s(0.1)).unwrap();
        let text = st.to_columnar_text();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "cell\taction\tN\tv\treward_sum\tto_0\tto_1");
        assert_eq!(lines[1], "1\t1\t0\t1\t1\t1\t0");
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn counts_conserved_under_random_updates() {
        use rand::Rng as _;
        let g = GridSpec::new(3, 2).unwrap();
        let mut st = AggStats::new(&g, 3);
        let mut rng = seeded_rng(4);
        for step in 0..2000 {
            let a = EnvState::uniform(2, &mut rng);
            let b = EnvState::uniform(2, &mut rng);
            let act = rng.gen_range(0..3);
            st.record_transition(&g, &a, act, rng.gen(), &b).unwrap();
            if step % 97 == 0 {
                st.close_episode();
            }
            for c in 0..g.num_cells() {
                for act in 0..3 {
                    let total = st.prior_count(c, act) + st.episode_count(c, act);
                    assert_eq!(st.transition_counts(c, act).iter().sum::<u64>(), total);
                    assert!(st.reward_sum(c, act) <= total as f64);
                }
            }
        }
    }
}
