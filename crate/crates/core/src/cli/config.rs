//! Flat, typed key-value configuration with dotted section names:
//!
//! ```text
//! # comment
//! env.name = lower-bound
//! env.epsilon = 0.1
//! agent.n = auto
//! run.T = 2^14
//! run.seeds = 1, 2, 3
//! ```
//!
//! Values are integers (including `2^k`), floats, booleans, strings (bare or
//! double-quoted) and comma-separated lists of those.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::agent::{AgentConfig, EviTolerance, SpanBound};
use crate::envs::{make_identity_env, make_lower_bound_env, make_smooth_env_with, EnvDescriptor, HolderParams};
use crate::{Result, UccrlError};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => {
                if x.fract() == 0.0 && x.is_finite() {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => {
                if s.chars().all(|c| c.is_ascii_alphanumeric() || "-_./".contains(c)) && !s.is_empty() {
                    write!(f, "{s}")
                } else {
                    write!(f, "\"{s}\"")
                }
            }
            Value::List(items) => {
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: Value,
    line: usize,
}

/// A parsed config file: keys with their values and source lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, Entry>,
}

fn parse_scalar(raw: &str, line: usize) -> Result<Value> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(UccrlError::Config {
            line,
            message: "empty value".into(),
        });
    }
    if let Some(inner) = raw.strip_prefix('"') {
        return inner
            .strip_suffix('"')
            .map(|s| Value::Str(s.to_string()))
            .ok_or_else(|| UccrlError::Config {
                line,
                message: format!("unterminated string {raw}"),
            });
    }
    match raw {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    if let Some((base, exp)) = raw.split_once('^') {
        let base: i64 = base.trim().parse().map_err(|_| UccrlError::Config {
            line,
            message: format!("bad power '{raw}'"),
        })?;
        let exp: u32 = exp.trim().parse().map_err(|_| UccrlError::Config {
            line,
            message: format!("bad power '{raw}'"),
        })?;
        return base.checked_pow(exp).map(Value::Int).ok_or_else(|| UccrlError::Config {
            line,
            message: format!("'{raw}' overflows"),
        });
    }
    if let Ok(i) = raw.parse::<i64>() {
        return Ok(Value::Int(i));
    }
    if let Ok(x) = raw.parse::<f64>() {
        if x.is_finite() {
            return Ok(Value::Float(x));
        }
    }
    if raw.chars().all(|c| c.is_ascii_alphanumeric() || "-_./".contains(c)) {
        return Ok(Value::Str(raw.to_string()));
    }
    Err(UccrlError::Config {
        line,
        message: format!("cannot parse value '{raw}'"),
    })
}

fn split_outside_quotes(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut in_quotes = false;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            c if c == sep && !in_quotes => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = split_outside_quotes(raw_line, '#')[0].trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| UccrlError::Config {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let key = key.trim();
            let valid_key = key.contains('.')
                && key
                    .split('.')
                    .all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
            if !valid_key {
                return Err(UccrlError::Config {
                    line,
                    message: format!("invalid key '{key}' (expected section.name)"),
                });
            }
            let parts = split_outside_quotes(value, ',');
            let value = if parts.len() > 1 {
                Value::List(parts.iter().map(|p| parse_scalar(p, line)).collect::<Result<_>>()?)
            } else {
                parse_scalar(value, line)?
            };
            if let Some(prev) = entries.insert(key.to_string(), Entry { value, line }) {
                return Err(UccrlError::Config {
                    line,
                    message: format!("duplicate key '{key}' (first set on line {})", prev.line),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| UccrlError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|e| &e.value)
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> UccrlError {
        UccrlError::Config {
            line: self.line(key),
            message: format!("{key}: {}", message.into()),
        }
    }

    fn keys_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .keys()
            .filter(move |k| k.starts_with(prefix))
            .map(String::as_str)
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Int(i)) => Ok(Some(*i as f64)),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(other) => Err(self.err(key, format!("expected a number, got '{other}'"))),
        }
    }

    fn uint(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Int(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(other) => Err(self.err(key, format!("expected a nonnegative integer, got '{other}'"))),
        }
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(other) => Err(self.err(key, format!("expected true or false, got '{other}'"))),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Str(s)) => Ok(Some(s.clone())),
            Some(other) => Err(self.err(key, format!("expected a string, got '{other}'"))),
        }
    }

    /// A number or the word `auto`.
    fn float_or_auto(&self, key: &str) -> Result<Option<Option<f64>>> {
        match self.get(key) {
            Some(Value::Str(s)) if s == "auto" => Ok(Some(None)),
            _ => self.float(key).map(|v| v.map(Some)),
        }
    }

    fn uint_list(&self, key: &str) -> Result<Option<Vec<u64>>> {
        let items = match self.get(key) {
            None => return Ok(None),
            Some(Value::List(items)) => items.clone(),
            Some(v) => vec![v.clone()],
        };
        items
            .iter()
            .map(|v| match v {
                Value::Int(i) if *i >= 0 => Ok(*i as u64),
                other => Err(self.err(key, format!("expected nonnegative integers, got '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn float_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let items = match self.get(key) {
            None => return Ok(None),
            Some(Value::List(items)) => items.clone(),
            Some(v) => vec![v.clone()],
        };
        items
            .iter()
            .map(|v| match v {
                Value::Int(i) => Ok(*i as f64),
                Value::Float(x) => Ok(*x),
                other => Err(self.err(key, format!("expected numbers, got '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

const KNOWN_KEYS: &[&str] = &[
    "env.name",
    "env.dimension",
    "env.actions",
    "env.L",
    "env.alpha",
    "env.seed",
    "env.n_cells",
    "env.reward_actions",
    "env.epsilon",
    "env.rewards",
    "agent.n",
    "agent.delta",
    "agent.H",
    "agent.L",
    "agent.alpha",
    "agent.epsilon_evi",
    "agent.span_truncation",
    "agent.confidence_scale",
    "agent.max_evi_iters",
    "run.T",
    "run.seeds",
    "run.anytime",
    "output.dir",
    "output.formats",
    "oracle.fine_n",
    "holder.pairs",
    "holder.seed",
    "sweep.axis",
    "sweep.values",
    "sweep.fit_min",
    "sweep.fit_max",
];

/// Environment block of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    LowerBound {
        n_cells: usize,
        reward_actions: usize,
        epsilon: f64,
        seed: u64,
    },
    Smooth {
        family: String,
        dimension: usize,
        actions: usize,
        lipschitz: f64,
        alpha: f64,
        seed: u64,
        params: BTreeMap<String, f64>,
    },
    Identity {
        dimension: usize,
        rewards: Vec<f64>,
    },
}

impl EnvSpec {
    pub fn build(&self) -> Result<EnvDescriptor> {
        match self {
            EnvSpec::LowerBound {
                n_cells,
                reward_actions,
                epsilon,
                seed,
            } => make_lower_bound_env(*n_cells, *reward_actions, *epsilon, *seed),
            EnvSpec::Smooth {
                family,
                dimension,
                actions,
                lipschitz,
                alpha,
                seed,
                params,
            } => make_smooth_env_with(
                family,
                *dimension,
                *actions,
                HolderParams::new(*lipschitz, *alpha)?,
                *seed,
                params,
            ),
            EnvSpec::Identity { dimension, rewards } => make_identity_env(*dimension, rewards.clone()),
        }
    }

    fn write(&self, out: &mut String) {
        use std::fmt::Write as _;
        match self {
            EnvSpec::LowerBound {
                n_cells,
                reward_actions,
                epsilon,
                seed,
            } => {
                let _ = writeln!(out, "env.name = lower-bound");
                let _ = writeln!(out, "env.n_cells = {n_cells}");
                let _ = writeln!(out, "env.reward_actions = {reward_actions}");
                let _ = writeln!(out, "env.epsilon = {}", Value::Float(*epsilon));
                let _ = writeln!(out, "env.seed = {seed}");
            }
            EnvSpec::Smooth {
                family,
                dimension,
                actions,
                lipschitz,
                alpha,
                seed,
                params,
            } => {
                let _ = writeln!(out, "env.name = {family}");
                let _ = writeln!(out, "env.dimension = {dimension}");
                let _ = writeln!(out, "env.actions = {actions}");
                let _ = writeln!(out, "env.L = {}", Value::Float(*lipschitz));
                let _ = writeln!(out, "env.alpha = {}", Value::Float(*alpha));
                let _ = writeln!(out, "env.seed = {seed}");
                for (k, v) in params {
                    let _ = writeln!(out, "env.param.{k} = {}", Value::Float(*v));
                }
            }
            EnvSpec::Identity { dimension, rewards } => {
                let _ = writeln!(out, "env.name = identity");
                let _ = writeln!(out, "env.dimension = {dimension}");
                let list = Value::List(rewards.iter().map(|r| Value::Float(*r)).collect());
                let _ = writeln!(out, "env.rewards = {list}");
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellsSpec {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub n: CellsSpec,
    pub delta: f64,
    /// `None` guesses `H = ln T`.
    pub span_bound: Option<f64>,
    /// Overrides of the environment's Hölder parameters.
    pub lipschitz: Option<f64>,
    pub alpha: Option<f64>,
    /// `None` uses `1 / sqrt(t_k)`.
    pub epsilon_evi: Option<f64>,
    pub span_truncation: bool,
    pub confidence_scale: f64,
    pub max_evi_iters: usize,
}

impl AgentSpec {
    pub fn to_agent_config(&self, env: &EnvDescriptor) -> Result<AgentConfig> {
        let holder = HolderParams::new(
            self.lipschitz.unwrap_or(env.holder().lipschitz()),
            self.alpha.unwrap_or(env.holder().alpha()),
        )?;
        let config = AgentConfig {
            cells_per_axis: match self.n {
                CellsSpec::Auto => None,
                CellsSpec::Fixed(n) => Some(n),
            },
            delta: self.delta,
            span_bound: self.span_bound.map_or(SpanBound::GuessLogT, SpanBound::Value),
            holder,
            evi_tolerance: self.epsilon_evi.map_or(EviTolerance::InvSqrtT, EviTolerance::Fixed),
            span_truncation: self.span_truncation,
            confidence_scale: self.confidence_scale,
            max_evi_iters: self.max_evi_iters,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Horizon,
    Cells,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<u64>,
    pub fit_min: Option<u64>,
    pub fit_max: Option<u64>,
}

/// The part of a config used by `oracle` and `check-holder`: the
/// environment plus the oracle and Hölder-check settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolConfig {
    pub env: EnvSpec,
    pub oracle_fine_n: Option<usize>,
    pub holder_pairs: usize,
    pub holder_seed: u64,
}

impl ToolConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_config(&ConfigFile::read(path)?)
    }

    pub fn from_config(cfg: &ConfigFile) -> Result<Self> {
        if let Some(key) = cfg
            .entries
            .keys()
            .find(|k| !KNOWN_KEYS.contains(&k.as_str()) && !k.starts_with("env.param."))
        {
            return Err(cfg.err(key, "unknown key"));
        }
        let env = ExperimentConfig::env_spec(cfg)?;
        env.build().map_err(|e| cfg.err("env.name", e.to_string()))?;
        let oracle_fine_n = cfg.uint("oracle.fine_n")?.map(|n| n as usize);
        if oracle_fine_n == Some(0) {
            return Err(cfg.err("oracle.fine_n", "must be >= 1"));
        }
        Ok(Self {
            env,
            oracle_fine_n,
            holder_pairs: cfg.uint("holder.pairs")?.unwrap_or(10_000) as usize,
            holder_seed: cfg.uint("holder.seed")?.unwrap_or(0),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub agent: AgentSpec,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub anytime: bool,
    pub output_dir: PathBuf,
    pub oracle_fine_n: Option<usize>,
    pub holder_pairs: usize,
    pub holder_seed: u64,
    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_config(&ConfigFile::read(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_config(&ConfigFile::parse(text)?)
    }

    pub fn from_config(cfg: &ConfigFile) -> Result<Self> {
        let tool = ToolConfig::from_config(cfg)?;
        let agent = Self::agent_spec(cfg)?;

        let horizon = cfg.uint("run.T")?.ok_or_else(|| cfg.err("run.T", "missing"))?;
        if horizon == 0 {
            return Err(cfg.err("run.T", "must be >= 1"));
        }
        let seeds = cfg.uint_list("run.seeds")?.unwrap_or_else(|| vec![0]);
        if seeds.is_empty() {
            return Err(cfg.err("run.seeds", "must not be empty"));
        }
        let anytime = cfg.boolean("run.anytime")?.unwrap_or(false);
        let output_dir = PathBuf::from(cfg.string("output.dir")?.unwrap_or_else(|| "out".into()));
        if let Some(formats) = cfg.get("output.formats") {
            let ok = match formats {
                Value::Str(s) => s == "csv",
                Value::List(items) => items.iter().all(|v| *v == Value::Str("csv".into())),
                _ => false,
            };
            if !ok {
                return Err(cfg.err("output.formats", "only csv is supported"));
            }
        }
        let sweep = match cfg.string("sweep.axis")? {
            None => {
                if cfg.get("sweep.values").is_some() {
                    return Err(cfg.err("sweep.values", "sweep.axis is missing"));
                }
                None
            }
            Some(axis) => {
                let axis = match axis.as_str() {
                    "T" => SweepAxis::Horizon,
                    "n" => SweepAxis::Cells,
                    other => return Err(cfg.err("sweep.axis", format!("expected T or n, got '{other}'"))),
                };
                let values = cfg
                    .uint_list("sweep.values")?
                    .ok_or_else(|| cfg.err("sweep.values", "missing"))?;
                if values.is_empty() || values.contains(&0) {
                    return Err(cfg.err("sweep.values", "must be a nonempty list of positive integers"));
                }
                Some(SweepSpec {
                    axis,
                    values,
                    fit_min: cfg.uint("sweep.fit_min")?,
                    fit_max: cfg.uint("sweep.fit_max")?,
                })
            }
        };
        let config = Self {
            env: tool.env,
            agent,
            horizon,
            seeds,
            anytime,
            output_dir,
            oracle_fine_n: tool.oracle_fine_n,
            holder_pairs: tool.holder_pairs,
            holder_seed: tool.holder_seed,
            sweep,
        };
        let env = config.env.build().map_err(|e| cfg.err("env.name", e.to_string()))?;
        config.agent.to_agent_config(&env).map_err(|e| {
            let key = ["agent.L", "agent.alpha"]
                .into_iter()
                .find(|k| cfg.get(k).is_some())
                .unwrap_or("env.name");
            cfg.err(key, e.to_string())
        })?;
        Ok(config)
    }

    pub fn tool_config(&self) -> ToolConfig {
        ToolConfig {
            env: self.env.clone(),
            oracle_fine_n: self.oracle_fine_n,
            holder_pairs: self.holder_pairs,
            holder_seed: self.holder_seed,
        }
    }

    fn env_spec(cfg: &ConfigFile) -> Result<EnvSpec> {
        let name = cfg.string("env.name")?.ok_or_else(|| cfg.err("env.name", "missing"))?;
        let seed = cfg.uint("env.seed")?.unwrap_or(0);
        Ok(match name.as_str() {
            "lower-bound" => EnvSpec::LowerBound {
                n_cells: cfg.uint("env.n_cells")?.unwrap_or(4) as usize,
                reward_actions: cfg.uint("env.reward_actions")?.unwrap_or(2) as usize,
                epsilon: cfg.float("env.epsilon")?.unwrap_or(0.1),
                seed,
            },
            "identity" => EnvSpec::Identity {
                dimension: cfg.uint("env.dimension")?.unwrap_or(1) as usize,
                rewards: cfg
                    .float_list("env.rewards")?
                    .ok_or_else(|| cfg.err("env.rewards", "missing"))?,
            },
            "piecewise-linear-reward" | "wrapped-kernel" | "constant-transition" => {
                let mut params = BTreeMap::new();
                for key in cfg.keys_with_prefix("env.param.") {
                    let value = cfg.float(key)?.unwrap_or_default();
                    params.insert(key["env.param.".len()..].to_string(), value);
                }
                EnvSpec::Smooth {
                    family: name.clone(),
                    dimension: cfg.uint("env.dimension")?.unwrap_or(1) as usize,
                    actions: cfg.uint("env.actions")?.unwrap_or(2) as usize,
                    lipschitz: cfg.float("env.L")?.unwrap_or(1.0),
                    alpha: cfg.float("env.alpha")?.unwrap_or(1.0),
                    seed,
                    params,
                }
            }
            other => return Err(cfg.err("env.name", format!("unknown environment '{other}'"))),
        })
    }

    fn agent_spec(cfg: &ConfigFile) -> Result<AgentSpec> {
        let n = match cfg.get("agent.n") {
            None => CellsSpec::Auto,
            Some(Value::Str(s)) if s == "auto" => CellsSpec::Auto,
            Some(Value::Int(i)) if *i >= 1 => CellsSpec::Fixed(*i as usize),
            Some(other) => {
                return Err(cfg.err("agent.n", format!("expected auto or a positive integer, got '{other}'")))
            }
        };
        let span_bound = cfg.float_or_auto("agent.H")?.flatten();
        if span_bound.is_some_and(|h| !(h > 0.0)) {
            return Err(cfg.err("agent.H", "must be positive"));
        }
        let delta = cfg.float("agent.delta")?.unwrap_or(0.1);
        if !(delta > 0.0 && delta < 1.0) {
            return Err(cfg.err("agent.delta", "must lie in (0,1)"));
        }
        let epsilon_evi = cfg.float_or_auto("agent.epsilon_evi")?.flatten();
        if epsilon_evi.is_some_and(|e| !(e > 0.0)) {
            return Err(cfg.err("agent.epsilon_evi", "must be positive"));
        }
        let confidence_scale = cfg.float("agent.confidence_scale")?.unwrap_or(1.0);
        if !(confidence_scale >= 0.0) {
            return Err(cfg.err("agent.confidence_scale", "must be >= 0"));
        }
        let max_evi_iters = cfg.uint("agent.max_evi_iters")?.unwrap_or(1_000_000) as usize;
        if max_evi_iters == 0 {
            return Err(cfg.err("agent.max_evi_iters", "must be >= 1"));
        }
        Ok(AgentSpec {
            n,
            delta,
            span_bound,
            lipschitz: cfg.float("agent.L")?,
            alpha: cfg.float("agent.alpha")?,
            epsilon_evi,
            span_truncation: cfg.boolean("agent.span_truncation")?.unwrap_or(false),
            confidence_scale,
            max_evi_iters,
        })
    }

    /// Replaces `auto` choices that depend only on the horizon by their
    /// concrete values. Anytime runs keep `auto`, which is resolved per round.
    pub fn expanded(&self) -> Result<Self> {
        let mut out = self.clone();
        if !self.anytime {
            let env = self.env.build()?;
            let alpha = self.agent.alpha.unwrap_or(env.holder().alpha());
            if self.agent.n == CellsSpec::Auto {
                out.agent.n = CellsSpec::Fixed(crate::agent::auto_cells_per_axis(self.horizon, alpha, env.dimension()));
            }
            if self.agent.span_bound.is_none() {
                out.agent.span_bound = Some((self.horizon.max(2) as f64).ln());
            }
        }
        Ok(out)
    }

    /// Serializes back to the config format. `output.dir` is left out so the
    /// echo can be re-run into any directory.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        self.env.write(&mut out);
        let a = &self.agent;
        match a.n {
            CellsSpec::Auto => out.push_str("agent.n = auto\n"),
            CellsSpec::Fixed(n) => {
                let _ = writeln!(out, "agent.n = {n}");
            }
        }
        let _ = writeln!(out, "agent.delta = {}", Value::Float(a.delta));
        match a.span_bound {
            None => out.push_str("agent.H = auto\n"),
            Some(h) => {
                let _ = writeln!(out, "agent.H = {}", Value::Float(h));
            }
        }
        if let Some(l) = a.lipschitz {
            let _ = writeln!(out, "agent.L = {}", Value::Float(l));
        }
        if let Some(alpha) = a.alpha {
            let _ = writeln!(out, "agent.alpha = {}", Value::Float(alpha));
        }
        match a.epsilon_evi {
            None => out.push_str("agent.epsilon_evi = auto\n"),
            Some(e) => {
                let _ = writeln!(out, "agent.epsilon_evi = {}", Value::Float(e));
            }
        }
        let _ = writeln!(out, "agent.span_truncation = {}", a.span_truncation);
        let _ = writeln!(out, "agent.confidence_scale = {}", Value::Float(a.confidence_scale));
        let _ = writeln!(out, "agent.max_evi_iters = {}", a.max_evi_iters);
        let _ = writeln!(out, "run.T = {}", self.horizon);
        let seeds = Value::List(self.seeds.iter().map(|s| Value::Int(*s as i64)).collect());
        let _ = writeln!(out, "run.seeds = {seeds}");
        let _ = writeln!(out, "run.anytime = {}", self.anytime);
        if let Some(n) = self.oracle_fine_n {
            let _ = writeln!(out, "oracle.fine_n = {n}");
        }
        let _ = writeln!(out, "holder.pairs = {}", self.holder_pairs);
        let _ = writeln!(out, "holder.seed = {}", self.holder_seed);
        if let Some(sweep) = &self.sweep {
            let axis = match sweep.axis {
                SweepAxis::Horizon => "T",
                SweepAxis::Cells => "n",
            };
            let _ = writeln!(out, "sweep.axis = {axis}");
            let values = Value::List(sweep.values.iter().map(|v| Value::Int(*v as i64)).collect());
            let _ = writeln!(out, "sweep.values = {values}");
            if let Some(v) = sweep.fit_min {
                let _ = writeln!(out, "sweep.fit_min = {v}");
            }
            if let Some(v) = sweep.fit_max {
                let _ = writeln!(out, "sweep.fit_max = {v}");
            }
        }
        out
    }
}
