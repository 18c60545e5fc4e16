//! The episodic optimistic control loop.
//!
//! Each episode starts by folding the last episode's counts into the prior
//! counts, recomputing estimates and confidence radii, and planning on the
//! optimistic aggregated MDP. The resulting cell policy is then followed
//! until the in-episode count of the current (cell, action) pair reaches
//! `max(1, prior count)`.

use crate::discretize::{AggStats, GridSpec};
use crate::envs::{EnvDescriptor, EnvState, HolderParams};
use crate::optimism::{
    build_plausible_set, extended_value_iteration_with, extract_continuous_policy, EviOptions, PlanResult, PlausibleSet,
};
use crate::{seeded_rng, Result, Rng, UccrlError};

/// Upper bound on the bias span handed to the planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpanBound {
    Value(f64),
    /// `H = ln T` for the (round) horizon `T`.
    GuessLogT,
}

/// Stopping tolerance of extended value iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EviTolerance {
    /// `1 / sqrt(t_k)` at the episode start `t_k`.
    InvSqrtT,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    /// Cells per axis; `None` picks `ceil(T^(1/(2d + 2 alpha)))` from the horizon.
    pub cells_per_axis: Option<usize>,
    pub delta: f64,
    pub span_bound: SpanBound,
    pub holder: HolderParams,
    pub evi_tolerance: EviTolerance,
    /// Clamp EVI values to a window of width H after every sweep.
    pub span_truncation: bool,
    /// Multiplier on the statistical part of both confidence radii. 1 is the
    /// algorithm as specified; 0 plans on the point estimates.
    pub confidence_scale: f64,
    pub max_evi_iters: usize,
}

impl AgentConfig {
    pub fn new(holder: HolderParams) -> Self {
        Self {
            cells_per_axis: None,
            delta: 0.1,
            span_bound: SpanBound::GuessLogT,
            holder,
            evi_tolerance: EviTolerance::InvSqrtT,
            span_truncation: false,
            confidence_scale: 1.0,
            max_evi_iters: 1_000_000,
        }
    }

    pub fn with_cells(mut self, n: usize) -> Self {
        self.cells_per_axis = Some(n);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells_per_axis == Some(0) {
            return Err(UccrlError::arg("n must be >= 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(UccrlError::arg(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if let SpanBound::Value(h) = self.span_bound {
            if !(h > 0.0) {
                return Err(UccrlError::arg(format!("H must be positive, got {h}")));
            }
        }
        if let EviTolerance::Fixed(eps) = self.evi_tolerance {
            if !(eps > 0.0) {
                return Err(UccrlError::arg("EVI tolerance must be positive"));
            }
        }
        if !(self.confidence_scale >= 0.0) || !self.confidence_scale.is_finite() {
            return Err(UccrlError::arg("confidence scale must be finite and >= 0"));
        }
        if self.max_evi_iters == 0 {
            return Err(UccrlError::arg("max_evi_iters must be >= 1"));
        }
        Ok(())
    }
}

/// `ceil(T^(1/(2d + 2 alpha)))`, at least 1.
pub fn auto_cells_per_axis(horizon: u64, alpha: f64, dimension: usize) -> usize {
    let exponent = 1.0 / (2.0 * dimension as f64 + 2.0 * alpha);
    let n = (horizon.max(1) as f64).powf(exponent);
    // Absorb rounding in exact powers, e.g. (2^20)^(1/4) = 32.
    ((n - 1e-9).ceil() as usize).max(1)
}

fn span_bound_value(bound: SpanBound, horizon: u64) -> f64 {
    match bound {
        SpanBound::Value(h) => h,
        SpanBound::GuessLogT => (horizon.max(2) as f64).ln(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based within the run.
    pub index: usize,
    /// Restart round (1 for plain runs).
    pub round: usize,
    /// Global step at which the episode started (1-based).
    pub start_t: u64,
    pub length: u64,
    /// Ended by the doubling rule rather than by the horizon.
    pub completed: bool,
    pub cells_per_axis: usize,
    pub optimistic_gain: f64,
    pub value_span: f64,
    pub span_bound: f64,
    pub evi_iterations: usize,
    /// Sum over the episode's steps of `rho* - r(s_t, a_t)`, when the
    /// environment knows `rho*`.
    pub regret_delta: Option<f64>,
}

/// Step-by-step log of a run, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    dimension: usize,
    states: Vec<f64>,
    actions: Vec<u32>,
    rewards: Vec<f64>,
    cells: Vec<u32>,
    episode_of_step: Vec<u32>,
    pub episodes: Vec<EpisodeRecord>,
    /// Set when planning failed; the record then ends at the failing episode.
    pub abort: Option<UccrlError>,
}

impl RunRecord {
    fn new(dimension: usize, capacity: usize) -> Self {
        Self {
            dimension,
            states: Vec::with_capacity(capacity * dimension),
            actions: Vec::with_capacity(capacity),
            rewards: Vec::with_capacity(capacity),
            cells: Vec::with_capacity(capacity),
            episode_of_step: Vec::with_capacity(capacity),
            episodes: Vec::new(),
            abort: None,
        }
    }

    fn push(&mut self, state: &EnvState, action: usize, reward: f64, cell: usize, episode: usize) {
        self.states.extend_from_slice(state.coords());
        self.actions.push(action as u32);
        self.rewards.push(reward);
        self.cells.push(cell as u32);
        self.episode_of_step.push(episode as u32);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// State at step `t` (0-based index).
    pub fn state(&self, step: usize) -> &[f64] {
        &self.states[step * self.dimension..(step + 1) * self.dimension]
    }

    pub fn action(&self, step: usize) -> usize {
        self.actions[step] as usize
    }

    /// Cell of the state at `step`, on the grid of that step's episode.
    pub fn cell(&self, step: usize) -> usize {
        self.cells[step] as usize
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// 1-based episode index of `step`; 0 for runs without episodes.
    pub fn episode_of(&self, step: usize) -> usize {
        self.episode_of_step[step] as usize
    }

    pub fn cumulative_rewards(&self) -> Vec<f64> {
        self.rewards
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Episodes ended by the doubling rule.
    pub fn completed_episodes(&self) -> usize {
        self.episodes.iter().filter(|e| e.completed).count()
    }

    /// Optimistic gain computed at the start of the episode containing `step`.
    pub fn optimistic_gain_at(&self, step: usize) -> Option<f64> {
        match self.episode_of(step) {
            0 => None,
            k => Some(self.episodes[k - 1].optimistic_gain),
        }
    }
}

/// Everything the agent knows at an episode start, after planning.
pub struct EpisodeContext<'a> {
    pub episode: usize,
    pub round: usize,
    pub grid: &'a GridSpec,
    pub stats: &'a AggStats,
    pub plausible: &'a PlausibleSet,
    pub plan: &'a PlanResult,
}

/// Hook invoked at every episode start.
pub trait EpisodeObserver {
    fn episode_start(&mut self, ctx: &EpisodeContext<'_>);
}

impl<F: FnMut(&EpisodeContext<'_>)> EpisodeObserver for F {
    fn episode_start(&mut self, ctx: &EpisodeContext<'_>) {
        self(ctx)
    }
}

struct NoObserver;

impl EpisodeObserver for NoObserver {
    fn episode_start(&mut self, _: &EpisodeContext<'_>) {}
}

struct Round {
    cells_per_axis: usize,
    delta: f64,
    span_bound: f64,
    steps: u64,
    index: usize,
}

/// Runs one restart of the algorithm for `round.steps` steps from `state`.
/// Returns the state reached, or `None` if planning failed (recorded in
/// `record.abort`).
fn run_round(
    env: &EnvDescriptor,
    config: &AgentConfig,
    round: &Round,
    mut state: EnvState,
    rng: &mut Rng,
    record: &mut RunRecord,
    observer: &mut dyn EpisodeObserver,
) -> Result<Option<EnvState>> {
    let grid = GridSpec::new(round.cells_per_axis, env.dimension())?;
    let actions = env.num_actions();
    let rho_star = env.known_optimal_gain();
    let mut stats = AggStats::new(&grid, actions);
    let end = stats.t() + round.steps;
    while stats.t() < end {
        stats.close_episode();
        let estimates = stats.compute_estimates();
        let mut plausible = build_plausible_set(&estimates, &stats, &grid, &config.holder, round.delta)?;
        if config.confidence_scale != 1.0 {
            plausible.scale_confidence(config.confidence_scale);
        }
        let epsilon = match config.evi_tolerance {
            EviTolerance::InvSqrtT => 1.0 / (stats.episode_start() as f64).sqrt(),
            EviTolerance::Fixed(eps) => eps,
        };
        let opts = EviOptions {
            epsilon,
            max_iters: config.max_evi_iters,
            span_truncation: config.span_truncation.then_some(round.span_bound),
        };
        let plan = match extended_value_iteration_with(&plausible, &opts) {
            Ok(plan) => plan,
            Err(e @ UccrlError::NonConvergence { .. }) => {
                record.abort = Some(e);
                return Ok(None);
            }
            Err(e) => return Err(e),
        };
        let episode = record.episodes.len() + 1;
        observer.episode_start(&EpisodeContext {
            episode,
            round: round.index,
            grid: &grid,
            stats: &stats,
            plausible: &plausible,
            plan: &plan,
        });
        let policy = extract_continuous_policy(&plan, &grid)?;
        let start_t = record.len() as u64 + 1;
        let mut regret_delta = rho_star.map(|_| 0.0);
        let mut length = 0;
        let mut completed = false;
        while stats.t() < end {
            let cell = grid.cell_index(&state);
            let action = policy.action(&state);
            if stats.doubling_reached(cell, action) {
                completed = true;
                break;
            }
            if let (Some(delta), Some(rho)) = (regret_delta.as_mut(), rho_star) {
                *delta += rho - env.mean_reward(&state, action)?;
            }
            let (reward, next) = env.step(&state, action, rng)?;
            stats.record_transition(&grid, &state, action, reward, &next)?;
            record.push(&state, action, reward, cell, episode);
            state = next;
            length += 1;
        }
        record.episodes.push(EpisodeRecord {
            index: episode,
            round: round.index,
            start_t,
            length,
            completed,
            cells_per_axis: round.cells_per_axis,
            optimistic_gain: plan.optimistic_gain,
            value_span: plan.value_span,
            span_bound: round.span_bound,
            evi_iterations: plan.iterations,
            regret_delta,
        });
    }
    Ok(Some(state))
}

fn check_inputs(config: &AgentConfig, horizon: u64) -> Result<()> {
    config.validate()?;
    if horizon == 0 {
        return Err(UccrlError::arg("horizon must be >= 1"));
    }
    Ok(())
}

/// Runs the algorithm for exactly `horizon` steps (unless planning fails).
pub fn run_uccrl(env: &EnvDescriptor, config: &AgentConfig, horizon: u64, seed: u64) -> Result<RunRecord> {
    run_uccrl_observed(env, config, horizon, seed, &mut NoObserver)
}

pub fn run_uccrl_observed(
    env: &EnvDescriptor,
    config: &AgentConfig,
    horizon: u64,
    seed: u64,
    observer: &mut dyn EpisodeObserver,
) -> Result<RunRecord> {
    check_inputs(config, horizon)?;
    let mut rng = seeded_rng(seed);
    let state = env.initial_state(&mut rng);
    let round = Round {
        cells_per_axis: config
            .cells_per_axis
            .unwrap_or_else(|| auto_cells_per_axis(horizon, config.holder.alpha(), env.dimension())),
        delta: config.delta,
        span_bound: span_bound_value(config.span_bound, horizon),
        steps: horizon,
        index: 1,
    };
    let mut record = RunRecord::new(env.dimension(), horizon as usize);
    run_round(env, config, &round, state, &mut rng, &mut record, observer)?;
    Ok(record)
}

/// Unknown-horizon variant: restarts in rounds `i = 1, 2, ...` with horizon
/// `2^i` and confidence `delta / 2^i`, stopping after `total_steps` steps.
/// With `SpanBound::GuessLogT` round `i` uses `H = ln 2^i`; without a fixed
/// `n` round `i` uses the automatic grid for horizon `2^i`.
pub fn run_uccrl_anytime(env: &EnvDescriptor, config: &AgentConfig, total_steps: u64, seed: u64) -> Result<RunRecord> {
    run_uccrl_anytime_observed(env, config, total_steps, seed, &mut NoObserver)
}

pub fn run_uccrl_anytime_observed(
    env: &EnvDescriptor,
    config: &AgentConfig,
    total_steps: u64,
    seed: u64,
    observer: &mut dyn EpisodeObserver,
) -> Result<RunRecord> {
    check_inputs(config, total_steps)?;
    let mut rng = seeded_rng(seed);
    let mut state = env.initial_state(&mut rng);
    let mut record = RunRecord::new(env.dimension(), total_steps as usize);
    let mut index = 1;
    while (record.len() as u64) < total_steps {
        if index >= 63 {
            return Err(UccrlError::arg("horizon too large for the doubling schedule"));
        }
        let round_horizon = 1u64 << index;
        let round = Round {
            cells_per_axis: config
                .cells_per_axis
                .unwrap_or_else(|| auto_cells_per_axis(round_horizon, config.holder.alpha(), env.dimension())),
            delta: config.delta / round_horizon as f64,
            span_bound: span_bound_value(config.span_bound, round_horizon),
            steps: round_horizon.min(total_steps - record.len() as u64),
            index,
        };
        match run_round(env, config, &round, state, &mut rng, &mut record, observer)? {
            Some(next) => state = next,
            None => break,
        }
        index += 1;
    }
    Ok(record)
}

/// Cumulative regret `t rho* - sum_{s <= t} r_s` after every step.
pub fn regret_of(record: &RunRecord, rho_star: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&rho_star) {
        return Err(UccrlError::arg(format!("rho* must lie in [0,1], got {rho_star}")));
    }
    Ok(record
        .cumulative_rewards()
        .into_iter()
        .enumerate()
        .map(|(i, cum)| (i + 1) as f64 * rho_star - cum)
        .collect())
}

/// Runs an arbitrary (possibly randomized) state-feedback policy for
/// `horizon` steps. The record has no episodes.
pub fn run_policy<F>(env: &EnvDescriptor, horizon: u64, seed: u64, mut policy: F) -> Result<RunRecord>
where
    F: FnMut(&EnvState, &mut Rng) -> usize,
{
    let mut rng = seeded_rng(seed);
    let mut state = env.initial_state(&mut rng);
    let mut record = RunRecord::new(env.dimension(), horizon as usize);
    for _ in 0..horizon {
        let action = policy(&state, &mut rng);
        let (reward, next) = env.step(&state, action, &mut rng)?;
        record.push(&state, action, reward, 0, 0);
        state = next;
    }
    Ok(record)
}
