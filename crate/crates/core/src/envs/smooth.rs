use std::collections::BTreeMap;
use std::str::FromStr;

use rand::Rng as _;

use super::{bernoulli, interval_mass, EnvState, HolderParams};
use crate::discretize::GridSpec;
use crate::{seeded_rng, Result, Rng, UccrlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothFamily {
    /// Tent rewards (requires alpha = 1); next state uniform on a window
    /// around the current state, clipped to `[0,1]^d` and renormalized.
    PiecewiseLinearReward,
    /// Hölder bump rewards; next state uniform on a window around
    /// `s + shift(a)`, wrapped around the unit torus.
    WrappedKernel,
    /// Hölder bump rewards; next state uniform on `[0,1]^d` regardless of
    /// state and action.
    ConstantTransition,
}

impl SmoothFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SmoothFamily::PiecewiseLinearReward => "piecewise-linear-reward",
            SmoothFamily::WrappedKernel => "wrapped-kernel",
            SmoothFamily::ConstantTransition => "constant-transition",
        }
    }

    /// L1 Lipschitz constant of a pure window kernel of width `window`, per axis.
    fn window_lipschitz(&self, window: f64) -> f64 {
        match self {
            // Near the boundary a clipped window can shrink to half its width.
            SmoothFamily::PiecewiseLinearReward => 4.0 / window,
            SmoothFamily::WrappedKernel => 2.0 / window,
            SmoothFamily::ConstantTransition => 0.0,
        }
    }

    fn default_window(&self) -> f64 {
        match self {
            SmoothFamily::PiecewiseLinearReward => 0.25,
            SmoothFamily::WrappedKernel => 0.2,
            SmoothFamily::ConstantTransition => 1.0,
        }
    }
}

impl FromStr for SmoothFamily {
    type Err = UccrlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "piecewise-linear-reward" => Ok(SmoothFamily::PiecewiseLinearReward),
            "wrapped-kernel" => Ok(SmoothFamily::WrappedKernel),
            "constant-transition" => Ok(SmoothFamily::ConstantTransition),
            other => Err(UccrlError::arg(format!("unknown environment family '{other}'"))),
        }
    }
}

/// Reward `max(0, peak - L * |s - center|^alpha)`, which is Hölder(L, alpha).
#[derive(Debug, Clone, PartialEq)]
struct RewardBump {
    peak: f64,
    center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothEnv {
    family: SmoothFamily,
    dimension: usize,
    holder: HolderParams,
    bumps: Vec<RewardBump>,
    shifts: Vec<f64>,
    window: f64,
    /// Weight of the window kernel in its mixture with the uniform law,
    /// chosen so that the mixture's Hölder constant does not exceed L.
    mix: f64,
}

impl SmoothEnv {
    pub(crate) fn new(
        family: SmoothFamily,
        dimension: usize,
        num_actions: usize,
        holder: HolderParams,
        seed: u64,
        overrides: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        if dimension == 0 || num_actions == 0 {
            return Err(UccrlError::arg("dimension and number of actions must be >= 1"));
        }
        if family == SmoothFamily::PiecewiseLinearReward && holder.alpha() != 1.0 {
            return Err(UccrlError::arg("piecewise-linear-reward requires alpha = 1"));
        }
        let known = |key: &str| -> bool {
            if key == "window" {
                return true;
            }
            let mut parts = key.split('.');
            let head = parts.next().unwrap_or("");
            let action_ok = parts
                .next()
                .and_then(|a| a.parse::<usize>().ok())
                .is_some_and(|a| a < num_actions);
            match (head, parts.next(), parts.next()) {
                ("peak" | "shift", None, None) => action_ok,
                ("center", None, None) => action_ok && dimension == 1,
                ("center", Some(axis), None) => action_ok && axis.parse::<usize>().is_ok_and(|i| i < dimension),
                _ => false,
            }
        };
        if let Some(key) = overrides.keys().find(|k| !known(k)) {
            return Err(UccrlError::arg(format!("unknown environment parameter '{key}'")));
        }

        let mut rng = seeded_rng(seed);
        let mut bumps = Vec::with_capacity(num_actions);
        let mut shifts = Vec::with_capacity(num_actions);
        for a in 0..num_actions {
            let peak = rng.gen_range(0.5..0.9);
            let center: Vec<f64> = (0..dimension).map(|_| rng.gen::<f64>()).collect();
            let shift = rng.gen::<f64>();
            let peak = overrides.get(&format!("peak.{a}")).copied().unwrap_or(peak);
            let center = center
                .into_iter()
                .enumerate()
                .map(|(i, c)| {
                    let key = if dimension == 1 {
                        format!("center.{a}")
                    } else {
                        format!("center.{a}.{i}")
                    };
                    overrides.get(&key).copied().unwrap_or(c)
                })
                .collect::<Vec<_>>();
            let shift = overrides.get(&format!("shift.{a}")).copied().unwrap_or(shift);
            if !(0.0..=1.0).contains(&peak) {
                return Err(UccrlError::arg(format!("peak.{a} must lie in [0,1]")));
            }
            if center.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(UccrlError::arg(format!("center of action {a} must lie in [0,1]^d")));
            }
            if !shift.is_finite() {
                return Err(UccrlError::arg(format!("shift.{a} must be finite")));
            }
            bumps.push(RewardBump { peak, center });
            shifts.push(shift.rem_euclid(1.0));
        }

        let window = overrides
            .get("window")
            .copied()
            .unwrap_or_else(|| family.default_window());
        if !(window > 0.0 && window <= 1.0) {
            return Err(UccrlError::arg(format!("window must lie in (0,1], got {window}")));
        }
        let d = dimension as f64;
        let kernel_lipschitz = family.window_lipschitz(window) * d.sqrt() * d.powf((1.0 - holder.alpha()) / 2.0);
        let mix = if kernel_lipschitz > 0.0 {
            (holder.lipschitz() / kernel_lipschitz).min(1.0)
        } else {
            0.0
        };
        Ok(Self {
            family,
            dimension,
            holder,
            bumps,
            shifts,
            window,
            mix,
        })
    }

    pub fn family(&self) -> SmoothFamily {
        self.family
    }

    pub(crate) fn params(&self) -> BTreeMap<String, f64> {
        let mut params = BTreeMap::new();
        for (a, bump) in self.bumps.iter().enumerate() {
            params.insert(format!("peak.{a}"), bump.peak);
            if self.dimension == 1 {
                params.insert(format!("center.{a}"), bump.center[0]);
            } else {
                for (i, c) in bump.center.iter().enumerate() {
                    params.insert(format!("center.{a}.{i}"), *c);
                }
            }
            if self.family == SmoothFamily::WrappedKernel {
                params.insert(format!("shift.{a}"), self.shifts[a]);
            }
        }
        if self.family != SmoothFamily::ConstantTransition {
            params.insert("window".into(), self.window);
            params.insert("mix".into(), self.mix);
        }
        params
    }

    pub(crate) fn mean_reward(&self, state: &EnvState, action: usize) -> f64 {
        let bump = &self.bumps[action];
        let dist = state
            .coords()
            .iter()
            .zip(&bump.center)
            .map(|(x, c)| (x - c) * (x - c))
            .sum::<f64>()
            .sqrt();
        (bump.peak - self.holder.modulus(dist)).max(0.0)
    }

    /// Every kernel keeps weight `1 - mix` on the uniform law, so the
    /// transition operator contracts spans by `mix` and any policy's bias
    /// span is at most `1 / (1 - mix)`.
    pub fn bias_span_bound(&self) -> Option<f64> {
        if !self.uses_window() {
            Some(1.0)
        } else if self.mix < 1.0 {
            Some(1.0 / (1.0 - self.mix))
        } else {
            None
        }
    }

    fn uses_window(&self) -> bool {
        self.family != SmoothFamily::ConstantTransition && self.mix > 0.0
    }

    pub(crate) fn step(&self, state: &EnvState, action: usize, rng: &mut Rng) -> (f64, EnvState) {
        let reward = bernoulli(self.mean_reward(state, action), rng);
        let windowed = self.uses_window() && rng.gen::<f64>() < self.mix;
        let next = if windowed {
            state
                .coords()
                .iter()
                .map(|&x| {
                    let u = rng.gen::<f64>();
                    match self.family {
                        SmoothFamily::PiecewiseLinearReward => {
                            let (lo, hi) = self.clipped_window(x);
                            lo + u * (hi - lo)
                        }
                        _ => {
                            let y = (x + self.shifts[action] + (u - 0.5) * self.window).rem_euclid(1.0);
                            if y >= 1.0 {
                                0.0
                            } else {
                                y
                            }
                        }
                    }
                })
                .collect()
        } else {
            (0..self.dimension).map(|_| rng.gen::<f64>()).collect()
        };
        (reward, EnvState::from_unit(next))
    }

    fn clipped_window(&self, x: f64) -> (f64, f64) {
        ((x - self.window / 2.0).max(0.0), (x + self.window / 2.0).min(1.0))
    }

    /// Mass of the window kernel on the axis interval `(a, b]`.
    fn axis_window_mass(&self, x: f64, action: usize, a: f64, b: f64) -> f64 {
        match self.family {
            SmoothFamily::PiecewiseLinearReward => {
                let (lo, hi) = self.clipped_window(x);
                interval_mass(lo, hi, a, b)
            }
            _ => {
                let mid = x + self.shifts[action];
                let (lo, hi) = (mid - self.window / 2.0, mid + self.window / 2.0);
                (-1..=2)
                    .map(|k| {
                        let k = k as f64;
                        (hi.min(b + k) - lo.max(a + k)).max(0.0)
                    })
                    .sum::<f64>()
                    / self.window
            }
        }
    }

    pub(crate) fn aggregated_kernel(&self, state: &EnvState, action: usize, grid: &GridSpec) -> Vec<f64> {
        let cells = grid.num_cells();
        let uniform = 1.0 / cells as f64;
        if !self.uses_window() {
            return vec![uniform; cells];
        }
        let n = grid.cells_per_axis();
        let axis_masses: Vec<Vec<f64>> = state
            .coords()
            .iter()
            .map(|&x| {
                (0..n)
                    .map(|j| {
                        let (a, b) = grid.axis_interval(j);
                        self.axis_window_mass(x, action, a, b)
                    })
                    .collect()
            })
            .collect();
        (0..cells)
            .map(|c| {
                let windowed: f64 = grid
                    .cell_coords(c)
                    .iter()
                    .zip(&axis_masses)
                    .map(|(&j, masses)| masses[j])
                    .product();
                self.mix * windowed + (1.0 - self.mix) * uniform
            })
            .collect()
    }

    /// Optimal gain when it has a closed form: with state-independent uniform
    /// transitions the optimal policy is greedy and `rho* = ∫ max_a r(s,a) ds`,
    /// which for d = 1 and alpha = 1 is the integral of a piecewise-linear
    /// function.
    pub(crate) fn closed_form_gain(&self) -> Option<f64> {
        if self.family != SmoothFamily::ConstantTransition || self.dimension != 1 || self.holder.alpha() != 1.0 {
            return None;
        }
        let slope = self.holder.lipschitz();
        // Every linear piece of every reward, plus the zero floor.
        let mut lines = vec![(0.0, 0.0)];
        for bump in &self.bumps {
            let c = bump.center[0];
            lines.push((slope, bump.peak - slope * c));
            lines.push((-slope, bump.peak + slope * c));
        }
        let mut knots = vec![0.0, 1.0];
        knots.extend(self.bumps.iter().map(|b| b.center[0]));
        for (i, &(m1, q1)) in lines.iter().enumerate() {
            for &(m2, q2) in &lines[i + 1..] {
                if m1 != m2 {
                    let x = (q2 - q1) / (m1 - m2);
                    if x > 0.0 && x < 1.0 {
                        knots.push(x);
                    }
                }
            }
        }
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let f = |x: f64| {
            let s = EnvState::from_unit(vec![x]);
            (0..self.bumps.len())
                .map(|a| self.mean_reward(&s, a))
                .fold(0.0, f64::max)
        };
        let gain = knots
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (f(w[0]) + f(w[1])))
            .sum::<f64>();
        Some(gain.clamp(0.0, 1.0))
    }
}
