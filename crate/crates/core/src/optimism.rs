//! Confidence sets around the aggregated estimates and optimistic planning
//! by extended value iteration on the aggregated MDP.

use std::cmp::Ordering;

use crate::discretize::{AggEstimates, AggStats, GridSpec};
use crate::envs::{EnvState, HolderParams};
use crate::{Result, UccrlError};

/// Reward and L1 transition radii per (cell, action) around the estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct PlausibleSet {
    estimates: AggEstimates,
    reward_radius: Vec<f64>,
    trans_radius: Vec<f64>,
    agg_error: f64,
}

/// Reward radius `agg + sqrt(7 ln(2 S A t_k / delta) / (2 max(1, N)))`.
pub fn reward_radius(agg_error: f64, num_cells: usize, num_actions: usize, t_k: u64, delta: f64, count: u64) -> f64 {
    let log_term = (2.0 * num_cells as f64 * num_actions as f64 * t_k as f64 / delta).ln();
    agg_error + (7.0 * log_term / (2.0 * count.max(1) as f64)).sqrt()
}

/// Transition radius `agg + sqrt(56 S ln(2 A t_k / delta) / max(1, N))`.
pub fn transition_radius(
    agg_error: f64,
    num_cells: usize,
    num_actions: usize,
    t_k: u64,
    delta: f64,
    count: u64,
) -> f64 {
    let log_term = (2.0 * num_actions as f64 * t_k as f64 / delta).ln();
    agg_error + (56.0 * num_cells as f64 * log_term / count.max(1) as f64).sqrt()
}

/// Builds the confidence set for the episode that starts at `stats.episode_start()`,
/// using the prior counts `N` of each pair.
pub fn build_plausible_set(
    estimates: &AggEstimates,
    stats: &AggStats,
    grid: &GridSpec,
    holder: &HolderParams,
    delta: f64,
) -> Result<PlausibleSet> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(UccrlError::arg(format!("delta must lie in (0,1), got {delta}")));
    }
    if estimates.num_cells() != grid.num_cells() || stats.num_cells() != grid.num_cells() {
        return Err(UccrlError::arg(
            "estimates, statistics and grid disagree on the number of cells",
        ));
    }
    let t_k = stats.episode_start().max(1);
    let cells = grid.num_cells();
    let actions = estimates.num_actions();
    let agg_error = holder.modulus(grid.cell_diameter());
    let mut reward = Vec::with_capacity(cells * actions);
    let mut trans = Vec::with_capacity(cells * actions);
    for cell in 0..cells {
        for action in 0..actions {
            let n = stats.prior_count(cell, action);
            reward.push(reward_radius(agg_error, cells, actions, t_k, delta, n));
            trans.push(transition_radius(agg_error, cells, actions, t_k, delta, n));
        }
    }
    Ok(PlausibleSet {
        estimates: estimates.clone(),
        reward_radius: reward,
        trans_radius: trans,
        agg_error,
    })
}

impl PlausibleSet {
    /// A degenerate set containing only the estimates themselves.
    pub fn exact(estimates: AggEstimates) -> Self {
        let pairs = estimates.num_cells() * estimates.num_actions();
        Self {
            estimates,
            reward_radius: vec![0.0; pairs],
            trans_radius: vec![0.0; pairs],
            agg_error: 0.0,
        }
    }

    /// Explicit radii, mainly for tests and external callers.
    pub fn with_radii(estimates: AggEstimates, reward_radius: Vec<f64>, trans_radius: Vec<f64>) -> Result<Self> {
        let pairs = estimates.num_cells() * estimates.num_actions();
        if reward_radius.len() != pairs || trans_radius.len() != pairs {
            return Err(UccrlError::arg(format!("expected {pairs} radii per kind")));
        }
        if reward_radius.iter().chain(&trans_radius).any(|r| !(*r >= 0.0)) {
            return Err(UccrlError::arg("radii must be nonnegative"));
        }
        Ok(Self {
            estimates,
            reward_radius,
            trans_radius,
            agg_error: 0.0,
        })
    }

    /// Multiplies the statistical part of every radius by `factor`, keeping
    /// the aggregation error.
    pub fn scale_confidence(&mut self, factor: f64) {
        let agg = self.agg_error;
        for r in self.reward_radius.iter_mut().chain(self.trans_radius.iter_mut()) {
            *r = agg + factor * (*r - agg);
        }
    }

    pub fn estimates(&self) -> &AggEstimates {
        &self.estimates
    }

    pub fn num_cells(&self) -> usize {
        self.estimates.num_cells()
    }

    pub fn num_actions(&self) -> usize {
        self.estimates.num_actions()
    }

    pub fn agg_error(&self) -> f64 {
        self.agg_error
    }

    pub fn reward_radius(&self, cell: usize, action: usize) -> f64 {
        self.reward_radius[cell * self.num_actions() + action]
    }

    pub fn trans_radius(&self, cell: usize, action: usize) -> f64 {
        self.trans_radius[cell * self.num_actions() + action]
    }

    pub fn max_reward_radius(&self) -> f64 {
        self.reward_radius.iter().copied().fold(0.0, f64::max)
    }

    /// Whether a reward `r` and aggregated row `p` for (cell, action) lie
    /// inside the set.
    pub fn contains(&self, cell: usize, action: usize, reward: f64, row: &[f64]) -> bool {
        let r_ok = (reward - self.estimates.r_hat(cell, action)).abs() <= self.reward_radius(cell, action);
        let l1: f64 = row
            .iter()
            .zip(self.estimates.p_hat(cell, action))
            .map(|(a, b)| (a - b).abs())
            .sum();
        r_ok && l1 <= self.trans_radius(cell, action)
    }
}

/// Cells sorted by decreasing value, lower index first among ties.
fn value_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| match values[j].total_cmp(&values[i]) {
        Ordering::Equal => i.cmp(&j),
        other => other,
    });
    order
}

fn optimistic_row_into(p_hat: &[f64], radius: f64, order: &[usize], out: &mut [f64]) {
    out.copy_from_slice(p_hat);
    let best = order[0];
    let add = (radius / 2.0).min(1.0 - p_hat[best]).max(0.0);
    if add == 0.0 {
        return;
    }
    out[best] = (p_hat[best] + add).min(1.0);
    let mut excess = add;
    for &j in order.iter().rev() {
        if excess <= 0.0 {
            break;
        }
        if j == best {
            continue;
        }
        // Slack absorbs the rounding left in `excess` by earlier subtractions.
        if out[j] <= excess + 1e-15 {
            excess -= out[j];
            out[j] = 0.0;
        } else {
            out[j] -= excess;
            excess = 0.0;
        }
    }
}

/// Maximizes `<p, values>` over distributions `p` with `|p - p_hat|_1 <= radius`:
/// moves up to `radius / 2` mass onto the best cell, taking it from the worst
/// cells first.
pub fn inner_transition_max(p_hat: &[f64], radius: f64, values: &[f64]) -> Vec<f64> {
    assert_eq!(p_hat.len(), values.len(), "row and value vector lengths differ");
    let order = value_order(values);
    let mut out = vec![0.0; p_hat.len()];
    optimistic_row_into(p_hat, radius, &order, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EviOptions {
    /// Stop when the span of the value increment is at most this.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Clamp the value vector to `[min, min + H]` after each sweep.
    pub span_truncation: Option<f64>,
}

impl EviOptions {
    pub fn new(epsilon: f64, max_iters: usize) -> Self {
        Self {
            epsilon,
            max_iters,
            span_truncation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub policy: Vec<usize>,
    pub optimistic_gain: f64,
    pub values: Vec<f64>,
    pub value_span: f64,
    pub iterations: usize,
}

pub fn extended_value_iteration(ps: &PlausibleSet, epsilon: f64, max_iters: usize) -> Result<PlanResult> {
    extended_value_iteration_with(ps, &EviOptions::new(epsilon, max_iters))
}

/// Value iteration on the optimistic extension of the aggregated MDP: each
/// sweep picks, per cell, the action whose optimistic reward plus optimistic
/// expected value is largest.
pub fn extended_value_iteration_with(ps: &PlausibleSet, opts: &EviOptions) -> Result<PlanResult> {
    if !(opts.epsilon > 0.0) {
        return Err(UccrlError::arg("EVI tolerance must be positive"));
    }
    if let Some(h) = opts.span_truncation {
        if !(h > 0.0) {
            return Err(UccrlError::arg("span truncation bound must be positive"));
        }
    }
    let cells = ps.num_cells();
    let actions = ps.num_actions();
    if ps.reward_radius.iter().chain(&ps.trans_radius).any(|r| !r.is_finite()) {
        return Err(UccrlError::arg("confidence radii must be finite"));
    }
    let est = &ps.estimates;
    let rewards: Vec<f64> = (0..cells * actions)
        .map(|pair| (est.r_hat(pair / actions, pair % actions) + ps.reward_radius[pair]).min(1.0))
        .collect();

    let mut values = vec![0.0; cells];
    let mut next = vec![0.0; cells];
    let mut policy = vec![0; cells];
    let mut row = vec![0.0; cells];
    let mut last_span = f64::INFINITY;
    for iteration in 1..=opts.max_iters {
        let order = value_order(&values);
        for cell in 0..cells {
            let mut best = f64::NEG_INFINITY;
            let mut best_action = 0;
            for action in 0..actions {
                let pair = cell * actions + action;
                optimistic_row_into(est.p_hat(cell, action), ps.trans_radius[pair], &order, &mut row);
                let q = rewards[pair] + row.iter().zip(&values).map(|(p, v)| p * v).sum::<f64>();
                if q > best {
                    best = q;
                    best_action = action;
                }
            }
            next[cell] = best;
            policy[cell] = best_action;
        }
        let (lo, hi) = next
            .iter()
            .zip(&values)
            .map(|(n, v)| n - v)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        last_span = hi - lo;
        let floor = next.iter().copied().fold(f64::INFINITY, f64::min);
        let mut moved = 0.0_f64;
        for (v, old) in next.iter_mut().zip(&values) {
            *v -= floor;
            if let Some(h) = opts.span_truncation {
                *v = v.min(h);
            }
            moved = moved.max((*v - old).abs());
        }
        std::mem::swap(&mut values, &mut next);
        // Under truncation the increments need not become constant; a fixed
        // point of the normalized, truncated map also ends the iteration.
        let settled = opts.span_truncation.is_some() && moved <= opts.epsilon;
        if last_span <= opts.epsilon || settled {
            let value_span = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return Ok(PlanResult {
                policy,
                optimistic_gain: 0.5 * (hi + lo),
                values,
                value_span,
                iterations: iteration,
            });
        }
    }
    Err(UccrlError::NonConvergence {
        iterations: opts.max_iters,
        last_span,
    })
}

/// Piecewise-constant extension of a cell policy to `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPolicy {
    grid: GridSpec,
    actions: Vec<usize>,
}

impl ContinuousPolicy {
    pub fn action(&self, state: &EnvState) -> usize {
        self.actions[self.grid.cell_index(state)]
    }

    pub fn cell_actions(&self) -> &[usize] {
        &self.actions
    }
}

pub fn extract_continuous_policy(plan: &PlanResult, grid: &GridSpec) -> Result<ContinuousPolicy> {
    if plan.policy.len() != grid.num_cells() {
        return Err(UccrlError::arg(format!(
            "policy covers {} cells, grid has {}",
            plan.policy.len(),
            grid.num_cells()
        )));
    }
    Ok(ContinuousPolicy {
        grid: grid.clone(),
        actions: plan.policy.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FiniteMdp;

    fn single(r: f64) -> PlausibleSet {
        let mdp = FiniteMdp::new(1, 1, vec![r], vec![1.0]).unwrap();
        PlausibleSet::exact(AggEstimates::from_mdp(&mdp))
    }

    #[test]
    fn reward_radius_direct_evaluation() {
        // ln(2 * 1 * 1 * 1 / delta) = 2 when delta = 2 e^-2.
        let delta = 2.0 * (-2.0f64).exp();
        let r = reward_radius(0.0, 1, 1, 1, delta, 7);
        assert!((r - 1.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn transition_radius_direct_evaluation() {
        let delta = 2.0 / std::f64::consts::E;
        let r = transition_radius(0.0, 1, 1, 1, delta, 56);
        assert!((r - 1.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn zero_and_one_visits_share_radii() {
        assert_eq!(
            reward_radius(0.1, 4, 2, 50, 0.1, 0),
            reward_radius(0.1, 4, 2, 50, 0.1, 1)
        );
        assert_eq!(
            transition_radius(0.1, 4, 2, 50, 0.1, 0),
            transition_radius(0.1, 4, 2, 50, 0.1, 1)
        );
    }

    #[test]
    fn build_rejects_bad_delta() {
        let grid = GridSpec::new(2, 1).unwrap();
        let stats = AggStats::new(&grid, 1);
        let est = stats.compute_estimates();
        let h = HolderParams::new(1.0, 1.0).unwrap();
        assert!(build_plausible_set(&est, &stats, &grid, &h, 0.0).is_err());
        assert!(build_plausible_set(&est, &stats, &grid, &h, 1.0).is_err());
        let ps = build_plausible_set(&est, &stats, &grid, &h, 0.05).unwrap();
        assert!((ps.agg_error() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inner_max_degenerate_balls() {
        let p = [0.2, 0.3, 0.5];
        let u = [1.0, 3.0, 2.0];
        assert_eq!(inner_transition_max(&p, 0.0, &u), p.to_vec());
        assert_eq!(inner_transition_max(&p, 2.0, &u), vec![0.0, 1.0, 0.0]);
        assert_eq!(inner_transition_max(&p, 7.5, &u), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn inner_max_small_example() {
        let q = inner_transition_max(&[0.5, 0.5], 0.2, &[0.0, 1.0]);
        assert!((q[0] - 0.4).abs() < 1e-15 && (q[1] - 0.6).abs() < 1e-15, "{q:?}");
    }

    #[test]
    fn inner_max_ties_prefer_lower_index() {
        let q = inner_transition_max(&[0.25, 0.25, 0.5], 0.5, &[1.0, 1.0, 0.0]);
        assert_eq!(q, vec![0.5, 0.25, 0.25]);
    }

    #[test]
    fn single_state_gain_is_reward() {
        let plan = extended_value_iteration(&single(0.5), 1e-9, 100).unwrap();
        assert!((plan.optimistic_gain - 0.5).abs() < 1e-12);
        assert_eq!(plan.policy, vec![0]);
        assert_eq!(plan.value_span, 0.0);
    }

    #[test]
    fn optimistic_rewards_are_clipped() {
        let mdp = FiniteMdp::new(1, 1, vec![0.9], vec![1.0]).unwrap();
        let ps = PlausibleSet::with_radii(AggEstimates::from_mdp(&mdp), vec![0.5], vec![0.0]).unwrap();
        let plan = extended_value_iteration(&ps, 1e-9, 100).unwrap();
        assert!((plan.optimistic_gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_chain_without_tolerance_budget_fails() {
        // Deterministic 2-cycle with unequal rewards: the increments oscillate
        // and never settle.
        let mdp = FiniteMdp::new(2, 1, vec![1.0, 0.0], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let ps = PlausibleSet::exact(AggEstimates::from_mdp(&mdp));
        let err = extended_value_iteration(&ps, 1e-6, 50).unwrap_err();
        match err {
            UccrlError::NonConvergence { iterations, last_span } => {
                assert_eq!(iterations, 50);
                assert!(last_span > 0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn span_truncation_caps_values() {
        // Two absorbing states with very different rewards plus a slow leak.
        let mdp = FiniteMdp::new(2, 1, vec![1.0, 0.0], vec![0.99, 0.01, 0.01, 0.99]).unwrap();
        let ps = PlausibleSet::exact(AggEstimates::from_mdp(&mdp));
        let free = extended_value_iteration(&ps, 1e-10, 100_000).unwrap();
        assert!(free.value_span > 10.0);
        let mut opts = EviOptions::new(1e-10, 100_000);
        opts.span_truncation = Some(2.0);
        let capped = extended_value_iteration_with(&ps, &opts).unwrap();
        assert!(capped.value_span <= 2.0 + 1e-12);
        assert!((capped.optimistic_gain - 0.5).abs() < 1e-9);
    }

    #[test]
    fn continuous_policy_is_cellwise() {
        let grid = GridSpec::new(2, 1).unwrap();
        let plan = PlanResult {
            policy: vec![0, 1],
            optimistic_gain: 0.0,
            values: vec![0.0, 0.0],
            value_span: 0.0,
            iterations: 1,
        };
        let pi = extract_continuous_policy(&plan, &grid).unwrap();
        assert_eq!(pi.action(&EnvState::scalar(0.1).unwrap()), 0);
        assert_eq!(pi.action(&EnvState::scalar(0.5).unwrap()), 0);
        assert_eq!(pi.action(&EnvState::scalar(0.50001).unwrap()), 1);
        let bad = GridSpec::new(3, 1).unwrap();
        assert!(extract_continuous_policy(&plan, &bad).is_err());
    }
}
