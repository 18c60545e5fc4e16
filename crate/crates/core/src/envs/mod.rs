//! Continuous-state environments on `[0,1]^d` with finitely many actions.
//!
//! Every built-in environment exposes, besides sampling, its exact mean
//! reward `r(s,a)` and its transition law aggregated onto any uniform grid.
//! The oracles in [`crate::eval`] rely on those exact quantities.

mod lower_bound;
mod smooth;

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng as _;

use crate::discretize::GridSpec;
use crate::{Result, Rng, UccrlError};

pub use lower_bound::LowerBoundEnv;
pub use smooth::{SmoothEnv, SmoothFamily};

/// A point of `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState(Vec<f64>);

impl EnvState {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(UccrlError::arg("a state needs at least one coordinate"));
        }
        if let Some(x) = coords.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(UccrlError::arg(format!("state coordinate {x} outside [0,1]")));
        }
        Ok(Self(coords))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    /// Constructor for coordinates that are in range by construction.
    pub(crate) fn from_unit(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|x| (0.0..=1.0).contains(x)));
        Self(coords)
    }

    pub fn uniform(dimension: usize, rng: &mut Rng) -> Self {
        Self((0..dimension).map(|_| rng.gen::<f64>()).collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// Euclidean distance.
    pub fn distance(&self, other: &EnvState) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Display for EnvState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

/// Hölder modulus `|f(s) - f(s')| <= L |s - s'|^alpha`, shared by rewards and
/// transition laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderParams {
    lipschitz: f64,
    alpha: f64,
}

impl HolderParams {
    pub fn new(lipschitz: f64, alpha: f64) -> Result<Self> {
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(UccrlError::arg(format!(
                "Hölder constant must be >= 0, got {lipschitz}"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(UccrlError::arg(format!(
                "Hölder exponent must lie in (0,1], got {alpha}"
            )));
        }
        Ok(Self { lipschitz, alpha })
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `L * distance^alpha`.
    pub fn modulus(&self, distance: f64) -> f64 {
        self.lipschitz * distance.powf(self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum EnvKind {
    LowerBound(LowerBoundEnv),
    Smooth(SmoothEnv),
    Identity { rewards: Vec<f64> },
}

/// A fully specified environment. Immutable after construction; stepping only
/// needs a caller-owned generator.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvDescriptor {
    name: String,
    dimension: usize,
    num_actions: usize,
    holder: HolderParams,
    known_optimal_gain: Option<f64>,
    params: BTreeMap<String, f64>,
    kind: EnvKind,
}

impl EnvDescriptor {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn holder(&self) -> HolderParams {
        self.holder
    }

    pub fn known_optimal_gain(&self) -> Option<f64> {
        self.known_optimal_gain
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// A known upper bound on the optimal bias span, when the structure
    /// gives one. Uniform resets bound it by the reward range.
    pub fn bias_span_hint(&self) -> Option<f64> {
        match &self.kind {
            EnvKind::Smooth(env) => env.bias_span_bound(),
            _ => None,
        }
    }

    pub fn as_lower_bound(&self) -> Option<&LowerBoundEnv> {
        match &self.kind {
            EnvKind::LowerBound(env) => Some(env),
            _ => None,
        }
    }

    fn check(&self, state: &EnvState, action: usize) -> Result<()> {
        if action >= self.num_actions {
            return Err(UccrlError::arg(format!(
                "action {action} out of range for {} actions",
                self.num_actions
            )));
        }
        if state.dimension() != self.dimension {
            return Err(UccrlError::arg(format!(
                "state has dimension {}, environment expects {}",
                state.dimension(),
                self.dimension
            )));
        }
        Ok(())
    }

    /// Samples a reward in `[0,1]` and the next state.
    pub fn step(&self, state: &EnvState, action: usize, rng: &mut Rng) -> Result<(f64, EnvState)> {
        self.check(state, action)?;
        Ok(match &self.kind {
            EnvKind::LowerBound(env) => env.step(state, action, rng),
            EnvKind::Smooth(env) => env.step(state, action, rng),
            EnvKind::Identity { rewards } => (rewards[action], state.clone()),
        })
    }

    /// Exact mean reward `r(s,a)`.
    pub fn mean_reward(&self, state: &EnvState, action: usize) -> Result<f64> {
        self.check(state, action)?;
        Ok(match &self.kind {
            EnvKind::LowerBound(env) => env.mean_reward(state, action),
            EnvKind::Smooth(env) => env.mean_reward(state, action),
            EnvKind::Identity { rewards } => rewards[action],
        })
    }

    /// Exact aggregated transition law `p^agg(cell | s, a)` on `grid`.
    pub fn aggregated_kernel(&self, state: &EnvState, action: usize, grid: &GridSpec) -> Result<Vec<f64>> {
        self.check(state, action)?;
        if grid.dimension() != self.dimension {
            return Err(UccrlError::arg("grid dimension does not match the environment"));
        }
        Ok(match &self.kind {
            EnvKind::LowerBound(env) => env.aggregated_kernel(state, action, grid),
            EnvKind::Smooth(env) => env.aggregated_kernel(state, action, grid),
            EnvKind::Identity { .. } => {
                let mut row = vec![0.0; grid.num_cells()];
                row[grid.cell_index(state)] = 1.0;
                row
            }
        })
    }

    /// Initial state of a run: uniform on `[0,1]^d`.
    pub fn initial_state(&self, rng: &mut Rng) -> EnvState {
        EnvState::uniform(self.dimension, rng)
    }
}

/// Builds the hard instance used for regret lower bounds: `n_cells` equal
/// intervals, each an isolated bandit with `num_reward_actions` Bernoulli(1/2)
/// arms, one of which (over all cells) pays Bernoulli(1/2 + epsilon). A final
/// "null" action pays nothing and resets the state uniformly on `[0,1]`.
pub fn make_lower_bound_env(
    n_cells: usize,
    num_reward_actions: usize,
    epsilon: f64,
    seed: u64,
) -> Result<EnvDescriptor> {
    let env = LowerBoundEnv::new(n_cells, num_reward_actions, epsilon, seed)?;
    let mut params = BTreeMap::new();
    params.insert("n_cells".into(), n_cells as f64);
    params.insert("num_reward_actions".into(), num_reward_actions as f64);
    params.insert("epsilon".into(), epsilon);
    params.insert("best_cell".into(), env.best_cell() as f64);
    params.insert("best_action".into(), env.best_action() as f64);
    params.insert("null_action".into(), env.null_action() as f64);
    Ok(EnvDescriptor {
        name: "lower-bound".into(),
        dimension: 1,
        num_actions: num_reward_actions + 1,
        // Piecewise constant on its own intervals: aggregation at any multiple
        // of n_cells is exact, so the learner can run with L = 0.
        holder: HolderParams::new(0.0, 1.0)?,
        known_optimal_gain: Some(0.5 + epsilon),
        params,
        kind: EnvKind::LowerBound(env),
    })
}

/// Builds a smooth environment of the given family. Unspecified constants
/// (reward peaks and centers, kernel shifts) are drawn from `seed`.
pub fn make_smooth_env(
    family: &str,
    dimension: usize,
    num_actions: usize,
    holder: HolderParams,
    seed: u64,
) -> Result<EnvDescriptor> {
    make_smooth_env_with(family, dimension, num_actions, holder, seed, &BTreeMap::new())
}

/// As [`make_smooth_env`], with explicit overrides for named constants:
/// `peak.<a>`, `center.<a>` (d = 1) or `center.<a>.<axis>`, `shift.<a>`,
/// `window`.
pub fn make_smooth_env_with(
    family: &str,
    dimension: usize,
    num_actions: usize,
    holder: HolderParams,
    seed: u64,
    overrides: &BTreeMap<String, f64>,
) -> Result<EnvDescriptor> {
    let family: SmoothFamily = family.parse()?;
    let env = SmoothEnv::new(family, dimension, num_actions, holder, seed, overrides)?;
    let params = env.params();
    Ok(EnvDescriptor {
        name: family.name().into(),
        dimension,
        num_actions,
        holder,
        known_optimal_gain: env.closed_form_gain(),
        params,
        kind: EnvKind::Smooth(env),
    })
}

/// Deterministic test environment: the state never moves and action `a`
/// always pays `rewards[a]`.
pub fn make_identity_env(dimension: usize, rewards: Vec<f64>) -> Result<EnvDescriptor> {
    if dimension == 0 {
        return Err(UccrlError::arg("dimension must be >= 1"));
    }
    if rewards.is_empty() {
        return Err(UccrlError::arg("need at least one action"));
    }
    if rewards.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(UccrlError::arg("rewards must lie in [0,1]"));
    }
    let best = rewards.iter().copied().fold(0.0, f64::max);
    let params = rewards
        .iter()
        .enumerate()
        .map(|(a, r)| (format!("reward.{a}"), *r))
        .collect();
    Ok(EnvDescriptor {
        name: "identity".into(),
        dimension,
        num_actions: rewards.len(),
        holder: HolderParams::new(0.0, 1.0)?,
        known_optimal_gain: Some(best),
        params,
        kind: EnvKind::Identity { rewards },
    })
}

/// Mass that the uniform law on `[lo, hi]` puts on the interval `(a, b]`.
pub(crate) fn interval_mass(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    let overlap = (hi.min(b) - lo.max(a)).max(0.0);
    overlap / (hi - lo)
}

pub(crate) fn bernoulli(mean: f64, rng: &mut Rng) -> f64 {
    if rng.gen::<f64>() < mean {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn state_validation() {
        assert!(EnvState::new(vec![0.0, 1.0]).is_ok());
        assert!(EnvState::new(vec![1.0 + 1e-15]).is_err());
        assert!(EnvState::new(vec![]).is_err());
        assert!(EnvState::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn holder_validation() {
        assert!(HolderParams::new(1.0, 1.0).is_ok());
        assert!(HolderParams::new(0.0, 0.5).is_ok());
        assert!(HolderParams::new(-1.0, 1.0).is_err());
        assert!(HolderParams::new(1.0, 0.0).is_err());
        assert!(HolderParams::new(1.0, 1.5).is_err());
    }

    #[test]
    fn identity_env_does_not_move() {
        let env = make_identity_env(2, vec![0.3, 0.8]).unwrap();
        let s = EnvState::new(vec![0.25, 0.75]).unwrap();
        let mut rng = seeded_rng(3);
        let (r, next) = env.step(&s, 1, &mut rng).unwrap();
        assert_eq!(r, 0.8);
        assert_eq!(next, s);
        assert_eq!(env.known_optimal_gain(), Some(0.8));
    }

    #[test]
    fn invalid_action_is_rejected() {
        let env = make_identity_env(1, vec![0.5]).unwrap();
        let s = EnvState::scalar(0.5).unwrap();
        let err = env.step(&s, 1, &mut seeded_rng(0)).unwrap_err();
        assert!(matches!(err, UccrlError::InvalidArgument(_)));
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let env = make_identity_env(2, vec![0.5]).unwrap();
        let s = EnvState::scalar(0.5).unwrap();
        assert!(env.mean_reward(&s, 0).is_err());
    }

    #[test]
    fn interval_mass_overlaps() {
        assert_eq!(interval_mass(0.0, 1.0, 0.25, 0.5), 0.25);
        assert_eq!(interval_mass(0.25, 0.5, 0.0, 0.25), 0.0);
        assert_eq!(interval_mass(0.25, 0.75, 0.5, 1.0), 0.5);
    }
}
