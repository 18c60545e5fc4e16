//! Regret checkpoints, aggregate statistics and log-log slope fits.

use std::fmt::Write as _;

/// Checkpoint steps for a run of length `horizon`: powers of two up to the
/// horizon, then the horizon itself.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (0..64).map(|k| 1u64 << k).take_while(|&t| t <= horizon).collect();
    if out.last() != Some(&horizon) && horizon > 0 {
        out.push(horizon);
    }
    out
}

/// Sample quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and nonempty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile(&sorted, 0.5)
}

/// Least-squares line through `(log2 x, log2 y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals in log2 units.
    pub residual: f64,
    pub points: usize,
}

/// Fits `log2 y = slope log2 x + intercept` over the points with `y > 0`.
/// Needs at least two distinct `x`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Option<LogLogFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.log2(), y.log2()))
        .collect();
    let k = logs.len() as f64;
    if logs.len() < 2 {
        return None;
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = logs.iter().map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Some(LogLogFit {
        slope,
        intercept,
        residual,
        points: logs.len(),
    })
}

/// Regret of one (config, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRegret {
    /// Sweep coordinate of the run (its horizon or cells per axis).
    pub point: u64,
    pub seed: u64,
    pub final_regret: f64,
    /// `(t, cumulative regret after t steps)`.
    pub checkpoints: Vec<(u64, f64)>,
}

impl SeedRegret {
    pub fn from_cumulative(point: u64, seed: u64, cum_regret: &[f64]) -> Self {
        let checkpoints = checkpoints(cum_regret.len() as u64)
            .into_iter()
            .map(|t| (t, cum_regret[t as usize - 1]))
            .collect();
        Self {
            point,
            seed,
            final_regret: cum_regret.last().copied().unwrap_or(0.0),
            checkpoints,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileRow {
    /// Checkpoint step or sweep coordinate.
    pub key: u64,
    pub count: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl QuantileRow {
    pub fn of(key: u64, values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            key,
            count: sorted.len(),
            min: sorted[0],
            q25: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q75: quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        }
    }
}

/// Per-run regrets plus their aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub runs: Vec<SeedRegret>,
    /// Quantiles of the final regret per sweep point, ascending.
    pub per_point: Vec<QuantileRow>,
    /// Quantiles per checkpoint step over the runs of the first point.
    pub per_checkpoint: Vec<QuantileRow>,
    /// Fit of median final regret against the sweep coordinate, within the
    /// window.
    pub fit: Option<LogLogFit>,
    pub fit_window: (u64, u64),
}

impl RegretSummary {
    /// Aggregates `runs`. The fit uses the sweep points in `window`
    /// (inclusive); for a single point it uses that point's checkpoints.
    pub fn new(mut runs: Vec<SeedRegret>, window: (u64, u64)) -> Self {
        runs.sort_by_key(|r| (r.point, r.seed));
        let mut points: Vec<u64> = runs.iter().map(|r| r.point).collect();
        points.dedup();
        let per_point: Vec<QuantileRow> = points
            .iter()
            .map(|&p| {
                let finals: Vec<f64> = runs.iter().filter(|r| r.point == p).map(|r| r.final_regret).collect();
                QuantileRow::of(p, &finals)
            })
            .collect();
        let per_checkpoint = match points.first() {
            None => Vec::new(),
            Some(&first) => {
                let group: Vec<&SeedRegret> = runs.iter().filter(|r| r.point == first).collect();
                let steps: Vec<u64> = group[0].checkpoints.iter().map(|c| c.0).collect();
                steps
                    .iter()
                    .filter_map(|&t| {
                        let values: Vec<f64> = group
                            .iter()
                            .filter_map(|r| r.checkpoints.iter().find(|c| c.0 == t).map(|c| c.1))
                            .collect();
                        (!values.is_empty()).then(|| QuantileRow::of(t, &values))
                    })
                    .collect()
            }
        };
        let in_window = |k: u64| k >= window.0 && k <= window.1;
        let fit_rows = if per_point.len() > 1 {
            &per_point
        } else {
            &per_checkpoint
        };
        let fit_points: Vec<(f64, f64)> = fit_rows
            .iter()
            .filter(|row| in_window(row.key))
            .map(|row| (row.key as f64, row.median))
            .collect();
        Self {
            fit: fit_loglog(&fit_points),
            runs,
            per_point,
            per_checkpoint,
            fit_window: window,
        }
    }

    /// Median final regret per sweep point as `(point, median)`.
    pub fn medians(&self) -> Vec<(u64, f64)> {
        self.per_point.iter().map(|r| (r.key, r.median)).collect()
    }

    /// Key-value lines, `prefix` prepended to each key.
    pub fn write_kv(&self, out: &mut String, prefix: &str) {
        for run in &self.runs {
            let _ = writeln!(
                out,
                "{prefix}run.{}.seed{}.final_regret = {}",
                run.point, run.seed, run.final_regret
            );
            for (t, r) in &run.checkpoints {
                let _ = writeln!(out, "{prefix}run.{}.seed{}.checkpoint.{t} = {r}", run.point, run.seed);
            }
        }
        let row_kv = |out: &mut String, name: &str, row: &QuantileRow| {
            let _ = writeln!(out, "{prefix}{name}.{}.count = {}", row.key, row.count);
            let _ = writeln!(out, "{prefix}{name}.{}.min = {}", row.key, row.min);
            let _ = writeln!(out, "{prefix}{name}.{}.q25 = {}", row.key, row.q25);
            let _ = writeln!(out, "{prefix}{name}.{}.median = {}", row.key, row.median);
            let _ = writeln!(out, "{prefix}{name}.{}.q75 = {}", row.key, row.q75);
            let _ = writeln!(out, "{prefix}{name}.{}.max = {}", row.key, row.max);
        };
        for row in &self.per_point {
            row_kv(out, "point", row);
        }
        for row in &self.per_checkpoint {
            row_kv(out, "checkpoint", row);
        }
        let _ = writeln!(out, "{prefix}fit.window = {}, {}", self.fit_window.0, self.fit_window.1);
        match &self.fit {
            Some(fit) => {
                let _ = writeln!(out, "{prefix}fit.slope = {}", fit.slope);
                let _ = writeln!(out, "{prefix}fit.intercept = {}", fit.intercept);
                let _ = writeln!(out, "{prefix}fit.residual = {}", fit.residual);
                let _ = writeln!(out, "{prefix}fit.points = {}", fit.points);
            }
            None => {
                let _ = writeln!(out, "{prefix}fit.slope = none");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_steps() {
        assert_eq!(checkpoints(1), vec![1]);
        assert_eq!(checkpoints(8), vec![1, 2, 4, 8]);
        assert_eq!(checkpoints(10), vec![1, 2, 4, 8, 10]);
    }

    #[test]
    fn quantiles_interpolate() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&sorted, 0.5), 2.5);
        assert_eq!(quantile(&sorted, 0.0), 1.0);
        assert_eq!(quantile(&sorted, 1.0), 4.0);
        assert_eq!(quantile(&sorted, 0.25), 1.75);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    }

    #[test]
    fn exact_power_law_fit() {
        let pts: Vec<(f64, f64)> = (4..10)
            .map(|k| (2f64.powi(k), 3.0 * 2f64.powf(0.75 * k as f64)))
            .collect();
        let fit = fit_loglog(&pts).unwrap();
        assert!((fit.slope - 0.75).abs() < 1e-12);
        assert!((fit.intercept - 3f64.log2()).abs() < 1e-12);
        assert!(fit.residual < 1e-20);
        assert_eq!(fit.points, 6);
    }

    #[test]
    fn fit_needs_two_positive_points() {
        assert!(fit_loglog(&[(2.0, 1.0)]).is_none());
        assert!(fit_loglog(&[(2.0, 1.0), (4.0, -1.0)]).is_none());
        assert!(fit_loglog(&[(2.0, 1.0), (2.0, 3.0)]).is_none());
    }

    #[test]
    fn summary_groups_by_point() {
        let runs = vec![
            SeedRegret::from_cumulative(4, 1, &[1.0, 2.0, 3.0, 4.0]),
            SeedRegret::from_cumulative(4, 0, &[0.0, 1.0, 1.0, 2.0]),
            SeedRegret::from_cumulative(2, 0, &[0.5, 1.0]),
        ];
        let summary = RegretSummary::new(runs, (1, u64::MAX));
        assert_eq!(summary.medians(), vec![(2, 1.0), (4, 3.0)]);
        assert_eq!(summary.runs[0].point, 2);
        let fit = summary.fit.unwrap();
        assert!((fit.slope - 3f64.log2()).abs() < 1e-12);
        assert_eq!(summary.per_checkpoint.len(), 2);
    }
}
