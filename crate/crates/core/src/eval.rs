//! Ground-truth oracles: Poisson equation, exhaustive policy search, the
//! optimal gain of an environment, and Monte-Carlo Hölder verification.

use std::fmt;

use rand::Rng as _;

use crate::discretize::GridSpec;
use crate::envs::{EnvDescriptor, EnvState};
use crate::linalg::solve_dense;
use crate::optimism::PlausibleSet;
use crate::{seeded_rng, FiniteMdp, Result, UccrlError};

/// Largest number of stationary deterministic policies [`brute_force_gain`]
/// will enumerate.
pub const MAX_ENUMERATED_POLICIES: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    pub gain: f64,
    pub bias: Vec<f64>,
    pub stationary_dist: Vec<f64>,
    /// Largest absolute violation of `gain + bias(s) = r(s) + sum p(s'|s) bias(s')`.
    pub residual: f64,
}

impl PoissonSolution {
    pub fn bias_span(&self) -> f64 {
        let (lo, hi) = self
            .bias
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &b| {
                (lo.min(b), hi.max(b))
            });
        hi - lo
    }
}

fn policy_chain(mdp: &FiniteMdp, policy: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = mdp.num_states();
    if policy.len() != n {
        return Err(UccrlError::arg(format!(
            "policy covers {} states, MDP has {n}",
            policy.len()
        )));
    }
    if let Some(a) = policy.iter().find(|&&a| a >= mdp.num_actions()) {
        return Err(UccrlError::arg(format!("policy action {a} out of range")));
    }
    let mut p = Vec::with_capacity(n * n);
    let mut r = Vec::with_capacity(n);
    for (s, &a) in policy.iter().enumerate() {
        p.extend_from_slice(mdp.transition_row(s, a));
        r.push(mdp.reward(s, a));
    }
    Ok((p, r))
}

/// Number of closed communicating classes of the chain with row-major
/// transition matrix `p`.
fn recurrent_class_count(p: &[f64], n: usize) -> usize {
    let mut reach = vec![false; n * n];
    for start in 0..n {
        let mut stack = vec![start];
        reach[start * n + start] = true;
        while let Some(s) = stack.pop() {
            for t in 0..n {
                if p[s * n + t] > 0.0 && !reach[start * n + t] {
                    reach[start * n + t] = true;
                    stack.push(t);
                }
            }
        }
    }
    let recurrent: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| !reach[i * n + j] || reach[j * n + i]))
        .collect();
    let mut seen = vec![false; n];
    let mut classes = 0;
    for &i in &recurrent {
        if seen[i] {
            continue;
        }
        classes += 1;
        for j in 0..n {
            if reach[i * n + j] {
                seen[j] = true;
            }
        }
    }
    classes
}

/// Solves the Poisson equation of a stationary policy for its gain and its
/// bias normalized by `<mu, bias> = 0`. Policies whose chain has more than one
/// recurrent class are rejected.
pub fn solve_poisson(mdp: &FiniteMdp, policy: &[usize]) -> Result<PoissonSolution> {
    let n = mdp.num_states();
    let (p, r) = policy_chain(mdp, policy)?;
    let classes = recurrent_class_count(&p, n);
    if classes != 1 {
        return Err(UccrlError::Unsupported(format!(
            "policy chain has {classes} recurrent classes"
        )));
    }

    // Stationary law: (P^T - I) mu = 0 with the last equation replaced by sum(mu) = 1.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = p[j * n + i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1) * n + j] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mu =
        solve_dense(a, rhs).ok_or_else(|| UccrlError::Unsupported("stationary distribution is not unique".into()))?;

    // Unknowns (gain, bias_0..bias_{n-1}).
    let m = n + 1;
    let mut a = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for s in 0..n {
        a[s * m] = 1.0;
        a[s * m + 1 + s] += 1.0;
        for t in 0..n {
            a[s * m + 1 + t] -= p[s * n + t];
        }
        rhs[s] = r[s];
    }
    for t in 0..n {
        a[n * m + 1 + t] = mu[t];
    }
    let x = solve_dense(a, rhs).ok_or_else(|| UccrlError::Unsupported("Poisson system is singular".into()))?;
    let gain = x[0];
    let bias = x[1..].to_vec();
    let residual = (0..n)
        .map(|s| {
            let expected: f64 = (0..n).map(|t| p[s * n + t] * bias[t]).sum();
            (gain + bias[s] - r[s] - expected).abs()
        })
        .fold(0.0, f64::max);
    Ok(PoissonSolution {
        gain,
        bias,
        stationary_dist: mu,
        residual,
    })
}

/// Best gain over all stationary deterministic policies whose chain is
/// unichain. Ties go to the lexicographically smallest policy.
pub fn brute_force_gain(mdp: &FiniteMdp) -> Result<(f64, Vec<usize>)> {
    let n = mdp.num_states();
    let a = mdp.num_actions();
    let count = u32::try_from(n)
        .ok()
        .and_then(|n| (a as u64).checked_pow(n))
        .filter(|&c| c <= MAX_ENUMERATED_POLICIES)
        .ok_or_else(|| UccrlError::TooLarge(format!("{a}^{n} policies exceed {MAX_ENUMERATED_POLICIES}")))?;
    let mut policy = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..count {
        match solve_poisson(mdp, &policy) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|(g, _)| sol.gain > g + 1e-12) {
                    best = Some((sol.gain, policy.clone()));
                }
            }
            Err(UccrlError::Unsupported(_)) => {}
            Err(e) => return Err(e),
        }
        // Mixed-radix increment, state 0 most significant.
        for digit in policy.iter_mut().rev() {
            *digit += 1;
            if *digit < a {
                break;
            }
            *digit = 0;
        }
    }
    best.ok_or_else(|| UccrlError::Unsupported("no stationary policy is unichain".into()))
}

/// Span of the bias of the best unichain policy.
pub fn bias_span_of(mdp: &FiniteMdp) -> Result<f64> {
    let (_, policy) = brute_force_gain(mdp)?;
    Ok(solve_poisson(mdp, &policy)?.bias_span())
}

/// The finite MDP obtained by evaluating an environment's mean rewards and
/// aggregated kernels at the cell centers of `grid`.
pub fn aggregate_env(env: &EnvDescriptor, grid: &GridSpec) -> Result<FiniteMdp> {
    let cells = grid.num_cells();
    let actions = env.num_actions();
    let mut rewards = Vec::with_capacity(cells * actions);
    let mut transitions = Vec::with_capacity(cells * actions * cells);
    for cell in 0..cells {
        let center = grid.cell_center(cell);
        for action in 0..actions {
            rewards.push(env.mean_reward(&center, action)?);
            let row = env.aggregated_kernel(&center, action, grid)?;
            let sum: f64 = row.iter().sum();
            transitions.extend(row.into_iter().map(|p| p / sum));
        }
    }
    FiniteMdp::new(cells, actions, rewards, transitions)
}

/// Optimal gain and bias span by relative value iteration on the
/// aperiodicity-transformed MDP `p' = (p + I) / 2`, `r' = r / 2`.
pub fn value_iteration_gain(mdp: &FiniteMdp, tolerance: f64, max_iters: usize) -> Result<(f64, f64)> {
    let n = mdp.num_states();
    let a = mdp.num_actions();
    let mut h = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iters {
        for s in 0..n {
            next[s] = (0..a)
                .map(|act| {
                    let row = mdp.transition_row(s, act);
                    let ev: f64 = row.iter().zip(&h).map(|(p, v)| p * v).sum();
                    0.5 * (mdp.reward(s, act) + ev + h[s])
                })
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let (lo, hi) = next
            .iter()
            .zip(&h)
            .map(|(x, y)| x - y)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let base = next[0];
        for (v, x) in h.iter_mut().zip(&next) {
            *v = x - base;
        }
        if hi - lo <= tolerance {
            let span =
                h.iter().copied().fold(f64::NEG_INFINITY, f64::max) - h.iter().copied().fold(f64::INFINITY, f64::min);
            return Ok((hi + lo, span));
        }
    }
    Err(UccrlError::Unsupported(
        "value iteration did not settle; the optimal gain may depend on the initial state".into(),
    ))
}

/// Cap on `S^2 A` for the dense aggregated MDP built by the oracle.
pub const MAX_ORACLE_ENTRIES: u128 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate {
    pub gain: f64,
    pub error_bound: f64,
}

/// Optimal gain of `env`: exact when the environment knows it, otherwise the
/// optimal gain of its aggregation on a grid with `fine_n` cells per axis,
/// with an error bound `2 (1 + H) L (sqrt(d) / (2 fine_n))^alpha`.
pub fn optimal_gain_oracle(env: &EnvDescriptor, fine_n: usize) -> Result<GainEstimate> {
    if let Some(gain) = env.known_optimal_gain() {
        return Ok(GainEstimate { gain, error_bound: 0.0 });
    }
    let grid = GridSpec::new(fine_n, env.dimension())?;
    let entries = (grid.num_cells() as u128).pow(2) * env.num_actions() as u128;
    if entries > MAX_ORACLE_ENTRIES {
        return Err(UccrlError::TooLarge(format!(
            "{} oracle cells x {} actions exceed {MAX_ORACLE_ENTRIES} dense transition entries",
            grid.num_cells(),
            env.num_actions()
        )));
    }
    let mdp = aggregate_env(env, &grid)?;
    let (gain, span) = value_iteration_gain(&mdp, 1e-11, 2_000_000)?;
    let h = env.bias_span_hint().unwrap_or(span);
    let holder = env.holder();
    let error_bound = 2.0 * (1.0 + h) * holder.modulus(grid.cell_diameter() / 2.0);
    Ok(GainEstimate {
        gain: gain.clamp(0.0, 1.0),
        error_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolderKind {
    Reward,
    Transition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderViolation {
    pub kind: HolderKind,
    pub action: usize,
    pub state: EnvState,
    pub other: EnvState,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub samples_checked: usize,
    pub max_reward_ratio: f64,
    pub max_trans_ratio: f64,
    /// Cells per axis of the aggregation used for transition laws.
    pub trans_grid: usize,
    pub tolerance: f64,
    pub violation_count: usize,
    /// The first [`HolderReport::MAX_LISTED`] violations.
    pub violations: Vec<HolderViolation>,
}

impl HolderReport {
    pub const MAX_LISTED: usize = 20;
}

impl fmt::Display for HolderReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples_checked = {}", self.samples_checked)?;
        writeln!(f, "max_reward_ratio = {}", self.max_reward_ratio)?;
        writeln!(f, "max_trans_ratio = {}", self.max_trans_ratio)?;
        writeln!(f, "trans_grid = {}", self.trans_grid)?;
        writeln!(f, "tolerance = {}", self.tolerance)?;
        writeln!(f, "violations = {}", self.violation_count)?;
        for (i, v) in self.violations.iter().enumerate() {
            let kind = match v.kind {
                HolderKind::Reward => "reward",
                HolderKind::Transition => "transition",
            };
            writeln!(
                f,
                "violation.{i} = {kind} action={} s=[{}] s'=[{}] ratio={}",
                v.action, v.state, v.other, v.ratio
            )?;
        }
        Ok(())
    }
}

fn holder_ratio(diff: f64, modulus: f64) -> f64 {
    if modulus > 0.0 {
        diff / modulus
    } else if diff > 1e-15 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Samples `num_pairs` nearby state pairs (distances log-uniform in
/// `[1e-4, 1]`) and checks both Hölder conditions at the environment's
/// declared `(L, alpha)`. Transition laws are compared after aggregation on
/// a fine grid.
pub fn holder_check(env: &EnvDescriptor, num_pairs: usize, seed: u64) -> Result<HolderReport> {
    const TOLERANCE: f64 = 1e-9;
    let d = env.dimension();
    let fine_n = ((4096f64).powf(1.0 / d as f64).floor() as usize).max(2);
    let grid = GridSpec::new(fine_n, d)?;
    let holder = env.holder();
    let mut rng = seeded_rng(seed);
    let mut report = HolderReport {
        samples_checked: 0,
        max_reward_ratio: 0.0,
        max_trans_ratio: 0.0,
        trans_grid: fine_n,
        tolerance: TOLERANCE,
        violation_count: 0,
        violations: Vec::new(),
    };
    let record = |report: &mut HolderReport, kind, action, s: &EnvState, o: &EnvState, ratio: f64| {
        let slot = match kind {
            HolderKind::Reward => &mut report.max_reward_ratio,
            HolderKind::Transition => &mut report.max_trans_ratio,
        };
        *slot = slot.max(ratio);
        if ratio > 1.0 + TOLERANCE {
            report.violation_count += 1;
            if report.violations.len() < HolderReport::MAX_LISTED {
                report.violations.push(HolderViolation {
                    kind,
                    action,
                    state: s.clone(),
                    other: o.clone(),
                    ratio,
                });
            }
        }
    };
    while report.samples_checked < num_pairs {
        let s = EnvState::uniform(d, &mut rng);
        let dir: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() - 0.5).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = 10f64.powf(rng.gen_range(-4.0..0.0));
        if norm == 0.0 {
            continue;
        }
        let other = EnvState::new(
            s.coords()
                .iter()
                .zip(&dir)
                .map(|(x, u)| (x + scale * u / norm).clamp(0.0, 1.0))
                .collect(),
        )?;
        let dist = s.distance(&other);
        if dist == 0.0 {
            continue;
        }
        report.samples_checked += 1;
        let modulus = holder.modulus(dist);
        for action in 0..env.num_actions() {
            let dr = (env.mean_reward(&s, action)? - env.mean_reward(&other, action)?).abs();
            record(
                &mut report,
                HolderKind::Reward,
                action,
                &s,
                &other,
                holder_ratio(dr, modulus),
            );
            let p = env.aggregated_kernel(&s, action, &grid)?;
            let q = env.aggregated_kernel(&other, action, &grid)?;
            let l1: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
            record(
                &mut report,
                HolderKind::Transition,
                action,
                &s,
                &other,
                holder_ratio(l1, modulus),
            );
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PlausibilityReport {
    pub reward_violations: usize,
    pub transition_violations: usize,
}

impl PlausibilityReport {
    pub fn plausible(&self) -> bool {
        self.reward_violations == 0 && self.transition_violations == 0
    }
}

/// Checks whether the environment's true rewards and aggregated transition
/// laws, probed at the center and corners of every cell, lie inside `ps`.
pub fn plausibility_check(env: &EnvDescriptor, grid: &GridSpec, ps: &PlausibleSet) -> Result<PlausibilityReport> {
    let mut report = PlausibilityReport::default();
    for cell in 0..grid.num_cells() {
        for point in grid.cell_probe_points(cell) {
            for action in 0..env.num_actions() {
                let r = env.mean_reward(&point, action)?;
                let est = ps.estimates();
                if (r - est.r_hat(cell, action)).abs() > ps.reward_radius(cell, action) {
                    report.reward_violations += 1;
                }
                let row = env.aggregated_kernel(&point, action, grid)?;
                let l1: f64 = row
                    .iter()
                    .zip(est.p_hat(cell, action))
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                if l1 > ps.trans_radius(cell, action) {
                    report.transition_violations += 1;
                }
            }
        }
    }
    Ok(report)
}
