//! Command implementations: run, sweep, oracle and check-holder.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use super::config::{CellsSpec, ExperimentConfig, SweepAxis, ToolConfig};
use super::summary::{RegretSummary, SeedRegret};
use crate::agent::{run_uccrl, run_uccrl_anytime, RunRecord};
use crate::envs::EnvDescriptor;
use crate::eval::{holder_check, optimal_gain_oracle, GainEstimate, HolderReport, MAX_ORACLE_ENTRIES};
use crate::{Result, UccrlError};

pub const STEP_CSV_HEADER: &str = "t,reward,cum_reward,cum_regret,episode,optimistic_gain_at_episode_start";
pub const REWARD_ONLY_CSV_HEADER: &str = "t,reward,cum_reward,episode,optimistic_gain_at_episode_start";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Config = 2,
    Runtime = 3,
    OracleUnavailable = 4,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Where the reference gain came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoSource {
    Known,
    Oracle { fine_n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoStar {
    pub gain: f64,
    pub error_bound: f64,
    pub source: RhoSource,
}

/// Largest per-axis resolution whose dense aggregated MDP fits the oracle
/// budget, capped at 2048 cells in total.
pub fn default_fine_n(env: &EnvDescriptor) -> usize {
    let d = env.dimension() as u32;
    let mut n = 1usize;
    loop {
        let next = n + 1;
        let cells = (next as u128).pow(d);
        if cells > 2048 || cells * cells * env.num_actions() as u128 > MAX_ORACLE_ENTRIES {
            return n;
        }
        n = next;
    }
}

/// Reference gain from the environment, or from the fine-grid oracle.
pub fn resolve_rho_star(env: &EnvDescriptor, fine_n: Option<usize>) -> Result<RhoStar> {
    if let Some(gain) = env.known_optimal_gain() {
        return Ok(RhoStar {
            gain,
            error_bound: 0.0,
            source: RhoSource::Known,
        });
    }
    let fine_n = fine_n.unwrap_or_else(|| default_fine_n(env));
    let est = optimal_gain_oracle(env, fine_n)?;
    Ok(RhoStar {
        gain: est.gain,
        error_bound: est.error_bound,
        source: RhoSource::Oracle { fine_n },
    })
}

/// One (config, seed) job of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    /// Sweep coordinate; the horizon for plain runs.
    pub point: u64,
    /// Expanded config of the point.
    pub config: ExperimentConfig,
    pub seed: u64,
}

impl RunSpec {
    pub fn label(&self) -> String {
        let n = match self.config.agent.n {
            CellsSpec::Auto => "auto".to_string(),
            CellsSpec::Fixed(n) => n.to_string(),
        };
        format!("T{}_n{n}_seed{}", self.config.horizon, self.seed)
    }

    pub fn csv_name(&self) -> String {
        format!("run_{}.csv", self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub label: String,
    pub point: u64,
    pub seed: u64,
    pub horizon: u64,
    pub steps: usize,
    pub total_reward: f64,
    pub episodes: usize,
    pub completed_episodes: usize,
    /// Cells per axis of the last episode.
    pub cells_per_axis: usize,
    pub num_actions: usize,
    pub regret: Option<SeedRegret>,
    pub abort: Option<UccrlError>,
}

/// Executes one run of the configured agent.
pub fn execute_run(env: &EnvDescriptor, config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let agent = config.agent.to_agent_config(env)?;
    if config.anytime {
        run_uccrl_anytime(env, &agent, config.horizon, seed)
    } else {
        run_uccrl(env, &agent, config.horizon, seed)
    }
}

/// Writes one row per step. With `rho_star` the regret column is included.
pub fn write_step_csv<W: Write>(record: &RunRecord, rho_star: Option<f64>, out: &mut W) -> io::Result<()> {
    let header = if rho_star.is_some() {
        STEP_CSV_HEADER
    } else {
        REWARD_ONLY_CSV_HEADER
    };
    writeln!(out, "{header}")?;
    let mut cum = 0.0;
    for (i, &reward) in record.rewards().iter().enumerate() {
        let t = i + 1;
        cum += reward;
        write!(out, "{t},{reward},{cum},")?;
        if let Some(rho) = rho_star {
            write!(out, "{},", t as f64 * rho - cum)?;
        }
        write!(out, "{},", record.episode_of(i))?;
        match record.optimistic_gain_at(i) {
            Some(g) => writeln!(out, "{g}")?,
            None => writeln!(out)?,
        }
    }
    Ok(())
}

fn summarize_record(spec: &RunSpec, env: &EnvDescriptor, record: &RunRecord, rho: Option<f64>) -> RunOutcome {
    let regret = rho.map(|rho| {
        let mut cum = 0.0;
        let cum_regret: Vec<f64> = record
            .rewards()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                cum += r;
                (i + 1) as f64 * rho - cum
            })
            .collect();
        SeedRegret::from_cumulative(spec.point, spec.seed, &cum_regret)
    });
    RunOutcome {
        label: spec.label(),
        point: spec.point,
        seed: spec.seed,
        horizon: spec.config.horizon,
        steps: record.len(),
        total_reward: record.total_reward(),
        episodes: record.episodes.len(),
        completed_episodes: record.completed_episodes(),
        cells_per_axis: record.episodes.last().map_or(0, |e| e.cells_per_axis),
        num_actions: env.num_actions(),
        regret,
        abort: record.abort.clone(),
    }
}

/// Runs all `specs` on a pool of `jobs` threads. When `out_dir` is given,
/// each run's step CSV is written there. Outcomes come back in `specs`
/// order regardless of scheduling.
pub fn run_batch(
    env: &EnvDescriptor,
    specs: &[RunSpec],
    rho_star: Option<f64>,
    out_dir: Option<&Path>,
    jobs: usize,
    quiet: bool,
) -> Result<Vec<RunOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| UccrlError::Io(e.to_string()))?;
    pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let record = execute_run(env, &spec.config, spec.seed)?;
                if let Some(dir) = out_dir {
                    let path = dir.join(spec.csv_name());
                    let mut w = BufWriter::new(fs::File::create(&path)?);
                    write_step_csv(&record, rho_star, &mut w)?;
                    w.flush()?;
                }
                if !quiet {
                    eprintln!("finished {}", spec.label());
                }
                Ok(summarize_record(spec, env, &record, rho_star))
            })
            .collect()
    })
}

fn write_rho(out: &mut String, rho: &std::result::Result<RhoStar, UccrlError>) {
    match rho {
        Ok(rho) => {
            let _ = writeln!(out, "regret_available = true");
            let _ = writeln!(out, "rho_star = {}", rho.gain);
            let _ = writeln!(out, "rho_star.error_bound = {}", rho.error_bound);
            match rho.source {
                RhoSource::Known => {
                    let _ = writeln!(out, "rho_star.source = known");
                }
                RhoSource::Oracle { fine_n } => {
                    let _ = writeln!(out, "rho_star.source = oracle");
                    let _ = writeln!(out, "rho_star.fine_n = {fine_n}");
                }
            }
        }
        Err(e) => {
            let _ = writeln!(out, "regret_available = false");
            let _ = writeln!(out, "warning = \"no known optimal gain and oracle unavailable: {e}\"");
        }
    }
}

fn write_outcomes(out: &mut String, outcomes: &[RunOutcome]) {
    let _ = writeln!(out, "runs = {}", outcomes.len());
    for o in outcomes {
        let p = format!("run.{}", o.label);
        let _ = writeln!(out, "{p}.steps = {}", o.steps);
        let _ = writeln!(out, "{p}.total_reward = {}", o.total_reward);
        let _ = writeln!(out, "{p}.episodes = {}", o.episodes);
        let _ = writeln!(out, "{p}.completed_episodes = {}", o.completed_episodes);
        let _ = writeln!(out, "{p}.cells_per_axis = {}", o.cells_per_axis);
        if let Some(r) = &o.regret {
            let _ = writeln!(out, "{p}.final_regret = {}", r.final_regret);
        }
        if let Some(e) = &o.abort {
            let _ = writeln!(out, "{p}.abort = \"{e}\"");
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| UccrlError::Io(format!("{}: {e}", path.display())))
}

/// What a `run` produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rho_star: Option<RhoStar>,
    pub outcomes: Vec<RunOutcome>,
    pub summary: Option<RegretSummary>,
}

impl RunReport {
    pub fn aborted(&self) -> bool {
        self.outcomes.iter().any(|o| o.abort.is_some())
    }
}

fn default_run_window(horizon: u64) -> (u64, u64) {
    ((horizon >> 6).max(1), horizon)
}

/// Runs every seed of `config` (ignoring any sweep block) and writes step
/// CSVs, `summary.txt` and `config.expanded.txt` into `out_dir`.
pub fn cmd_run(config: &ExperimentConfig, out_dir: &Path, jobs: usize, quiet: bool) -> Result<RunReport> {
    let mut config = config.expanded()?;
    config.sweep = None;
    fs::create_dir_all(out_dir)?;
    let env = config.env.build()?;
    let rho = resolve_rho_star(&env, config.oracle_fine_n);
    if let (Err(e), false) = (&rho, quiet) {
        eprintln!("warning: regret columns omitted: {e}");
    }
    let specs: Vec<RunSpec> = config
        .seeds
        .iter()
        .map(|&seed| RunSpec {
            point: config.horizon,
            config: config.clone(),
            seed,
        })
        .collect();
    let rho_gain = rho.as_ref().ok().map(|r| r.gain);
    let outcomes = run_batch(&env, &specs, rho_gain, Some(out_dir), jobs, quiet)?;

    write_run_artifacts(out_dir, &env, &config, &rho, outcomes)
}

/// Writes `summary.txt` and `config.expanded.txt` for one run config.
fn write_run_artifacts(
    dir: &Path,
    env: &EnvDescriptor,
    config: &ExperimentConfig,
    rho: &std::result::Result<RhoStar, UccrlError>,
    outcomes: Vec<RunOutcome>,
) -> Result<RunReport> {
    let summary = rho.is_ok().then(|| {
        RegretSummary::new(
            outcomes.iter().filter_map(|o| o.regret.clone()).collect(),
            default_run_window(config.horizon),
        )
    });
    let mut text = String::new();
    let _ = writeln!(text, "command = run");
    let _ = writeln!(text, "env.name = {}", env.name());
    let _ = writeln!(text, "horizon = {}", config.horizon);
    write_rho(&mut text, rho);
    write_outcomes(&mut text, &outcomes);
    if let Some(summary) = &summary {
        summary.write_kv(&mut text, "regret.");
    }
    write_file(&dir.join("summary.txt"), &text)?;
    write_file(&dir.join("config.expanded.txt"), &config.to_text())?;
    Ok(RunReport {
        rho_star: rho.as_ref().ok().copied(),
        outcomes,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rho_star: Option<RhoStar>,
    pub points: Vec<(u64, RunReport)>,
    pub summary: Option<RegretSummary>,
    /// Sweep value with the lowest median final regret.
    pub best_point: Option<u64>,
}

impl SweepReport {
    pub fn aborted(&self) -> bool {
        self.points.iter().any(|(_, r)| r.aborted())
    }
}

/// The concrete configs of a sweep, one per value.
pub fn sweep_points(config: &ExperimentConfig) -> Result<Vec<(u64, ExperimentConfig)>> {
    let sweep = config.sweep.as_ref().ok_or_else(|| UccrlError::Config {
        line: 0,
        message: "sweep.axis is missing".into(),
    })?;
    sweep
        .values
        .iter()
        .map(|&value| {
            let mut point = config.clone();
            point.sweep = None;
            match sweep.axis {
                SweepAxis::Horizon => point.horizon = value,
                SweepAxis::Cells => point.agent.n = CellsSpec::Fixed(value as usize),
            }
            Ok((value, point.expanded()?))
        })
        .collect()
}

/// Runs every sweep point. Each point's artifacts are written exactly as
/// `run` would write them, into `point_<axis><value>/`; the sweep-level
/// summary goes next to those directories.
pub fn cmd_sweep(config: &ExperimentConfig, out_dir: &Path, jobs: usize, quiet: bool) -> Result<SweepReport> {
    let sweep = config.sweep.clone().ok_or_else(|| UccrlError::Config {
        line: 0,
        message: "sweep.axis is missing".into(),
    })?;
    let axis = match sweep.axis {
        SweepAxis::Horizon => "T",
        SweepAxis::Cells => "n",
    };
    fs::create_dir_all(out_dir)?;
    let env = config.env.build()?;
    let rho = resolve_rho_star(&env, config.oracle_fine_n);
    if let (Err(e), false) = (&rho, quiet) {
        eprintln!("warning: regret columns omitted: {e}");
    }
    let rho_gain = rho.as_ref().ok().map(|r| r.gain);
    let points = sweep_points(config)?;

    // All (point, seed) jobs go through one pool.
    let mut specs = Vec::new();
    for (value, point) in &points {
        fs::create_dir_all(out_dir.join(format!("point_{axis}{value}")))?;
        for &seed in &point.seeds {
            specs.push(RunSpec {
                point: *value,
                config: point.clone(),
                seed,
            });
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| UccrlError::Io(e.to_string()))?;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let dir = out_dir.join(format!("point_{axis}{}", spec.point));
                run_batch(&env, std::slice::from_ref(spec), rho_gain, Some(&dir), 1, quiet).map(|mut v| v.remove(0))
            })
            .collect::<Result<_>>()
    })?;

    let window = (sweep.fit_min.unwrap_or(1), sweep.fit_max.unwrap_or(u64::MAX));
    let mut reports = Vec::new();
    for (value, point) in &points {
        let dir = out_dir.join(format!("point_{axis}{value}"));
        let point_outcomes: Vec<RunOutcome> = outcomes.iter().filter(|o| o.point == *value).cloned().collect();
        reports.push((*value, write_run_artifacts(&dir, &env, point, &rho, point_outcomes)?));
    }

    let summary =
        rho_gain.map(|_| RegretSummary::new(outcomes.iter().filter_map(|o| o.regret.clone()).collect(), window));
    let best_point = summary.as_ref().and_then(|s| {
        s.per_point
            .iter()
            .min_by(|a, b| a.median.total_cmp(&b.median))
            .map(|row| row.key)
    });
    let mut text = String::new();
    let _ = writeln!(text, "command = sweep");
    let _ = writeln!(text, "env.name = {}", env.name());
    let _ = writeln!(text, "sweep.axis = {axis}");
    write_rho(&mut text, &rho);
    write_outcomes(&mut text, &outcomes);
    if let Some(summary) = &summary {
        summary.write_kv(&mut text, "regret.");
        let mut csv = String::from("point,seed,final_regret\n");
        for r in &summary.runs {
            let _ = writeln!(csv, "{},{},{}", r.point, r.seed, r.final_regret);
        }
        write_file(&out_dir.join("sweep_runs.csv"), &csv)?;
        let mut csv = String::from("point,count,min,q25,median,q75,max\n");
        for row in &summary.per_point {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                row.key, row.count, row.min, row.q25, row.median, row.q75, row.max
            );
        }
        write_file(&out_dir.join("sweep_quantiles.csv"), &csv)?;
    }
    if let Some(best) = best_point {
        let interior = sweep.values.len() > 2
            && best != *sweep.values.iter().min().unwrap()
            && best != *sweep.values.iter().max().unwrap();
        let _ = writeln!(text, "best_point = {best}");
        let _ = writeln!(text, "best_point.interior = {interior}");
    }
    write_file(&out_dir.join("sweep_summary.txt"), &text)?;
    write_file(&out_dir.join("config.expanded.txt"), &config.to_text())?;
    Ok(SweepReport {
        rho_star: rho.ok(),
        points: reports,
        summary,
        best_point,
    })
}

/// Key-value text of an oracle estimate.
pub fn oracle_text(rho: &RhoStar) -> String {
    let est = GainEstimate {
        gain: rho.gain,
        error_bound: rho.error_bound,
    };
    let mut text = format!("gain = {}\nerror_bound = {}\n", est.gain, est.error_bound);
    match rho.source {
        RhoSource::Known => text.push_str("source = known\n"),
        RhoSource::Oracle { fine_n } => {
            let _ = write!(text, "source = oracle\nfine_n = {fine_n}\n");
        }
    }
    text
}

pub fn cmd_oracle(config: &ToolConfig, fine_n: Option<usize>) -> Result<RhoStar> {
    let env = config.env.build()?;
    resolve_rho_star(&env, fine_n.or(config.oracle_fine_n))
}

pub fn cmd_check_holder(config: &ToolConfig, pairs: Option<usize>, seed: Option<u64>) -> Result<HolderReport> {
    let env = config.env.build()?;
    holder_check(
        &env,
        pairs.unwrap_or(config.holder_pairs),
        seed.unwrap_or(config.holder_seed),
    )
}

#[derive(Debug, Parser)]
#[command(
    name = "uccrl",
    version,
    about = "Optimistic RL on continuous state spaces: experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Experiment config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Maximum number of concurrent runs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every seed of the config.
    Run,
    /// Run the config's sweep grid and fit the regret slope.
    Sweep,
    /// Print the optimal gain of the configured environment.
    Oracle {
        /// Cells per axis of the oracle grid.
        #[arg(long)]
        fine_n: Option<usize>,
    },
    /// Monte-Carlo check of the environment's declared Hölder constants.
    CheckHolder {
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn exit_for(e: &UccrlError) -> ExitCode {
    match e {
        UccrlError::Config { .. } => ExitCode::Config,
        _ => ExitCode::Runtime,
    }
}

fn fail(e: &UccrlError, code: ExitCode) -> i32 {
    eprintln!("error: {e}");
    code.code()
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::Config.code() } else { 0 };
        }
    };
    let Some(config_path) = cli.common.config.clone() else {
        eprintln!("error: --config PATH is required");
        return ExitCode::Config.code();
    };
    let common = &cli.common;
    match cli.command {
        Command::Run | Command::Sweep => {
            let config = match ExperimentConfig::from_file(&config_path) {
                Ok(c) => c,
                Err(e) => return fail(&e, ExitCode::Config),
            };
            let out = common.out.clone().unwrap_or_else(|| config.output_dir.clone());
            let result = if matches!(cli.command, Command::Run) {
                cmd_run(&config, &out, common.jobs, common.quiet).map(|r| r.aborted())
            } else if config.sweep.is_none() {
                return fail(
                    &UccrlError::Config {
                        line: 0,
                        message: "sweep needs sweep.axis and sweep.values".into(),
                    },
                    ExitCode::Config,
                );
            } else {
                cmd_sweep(&config, &out, common.jobs, common.quiet).map(|r| r.aborted())
            };
            match result {
                Ok(false) => ExitCode::Success.code(),
                Ok(true) => {
                    eprintln!("error: planning aborted in at least one run; see summary");
                    ExitCode::Runtime.code()
                }
                Err(e) => fail(&e, exit_for(&e)),
            }
        }
        Command::Oracle { fine_n } => {
            let config = match ToolConfig::from_file(&config_path) {
                Ok(c) => c,
                Err(e) => return fail(&e, ExitCode::Config),
            };
            match cmd_oracle(&config, fine_n) {
                Ok(rho) => {
                    let text = oracle_text(&rho);
                    print!("{text}");
                    if let Some(dir) = &common.out {
                        if let Err(e) = fs::create_dir_all(dir)
                            .map_err(UccrlError::from)
                            .and_then(|_| write_file(&dir.join("oracle.txt"), &text))
                        {
                            return fail(&e, ExitCode::Runtime);
                        }
                    }
                    ExitCode::Success.code()
                }
                Err(e) => fail(&e, ExitCode::OracleUnavailable),
            }
        }
        Command::CheckHolder { pairs, seed } => {
            let config = match ToolConfig::from_file(&config_path) {
                Ok(c) => c,
                Err(e) => return fail(&e, ExitCode::Config),
            };
            match cmd_check_holder(&config, pairs, seed) {
                Ok(report) => {
                    let text = report.to_string();
                    print!("{text}");
                    if let Some(dir) = &common.out {
                        if let Err(e) = fs::create_dir_all(dir)
                            .map_err(UccrlError::from)
                            .and_then(|_| write_file(&dir.join("holder.txt"), &text))
                        {
                            return fail(&e, ExitCode::Runtime);
                        }
                    }
                    ExitCode::Success.code()
                }
                Err(e) => fail(&e, exit_for(&e)),
            }
        }
    }
}
