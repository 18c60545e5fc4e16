//! C interface to the `uccrl` library.
//!
//! Objects cross the boundary as opaque handles created by `uccrl_*_new`
//! style constructors and released with the matching `*_free`. Every
//! fallible call returns a [`UccrlStatus`]; on failure the message is kept
//! per thread and can be read with [`uccrl_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use uccrl::agent::{run_uccrl, run_uccrl_anytime, AgentConfig, RunRecord, SpanBound};
use uccrl::envs::{make_lower_bound_env, make_smooth_env, EnvDescriptor, HolderParams};
use uccrl::eval::{optimal_gain_oracle, solve_poisson};
use uccrl::{FiniteMdp, UccrlError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UccrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonConvergence = 3,
    Unsupported = 4,
    TooLarge = 5,
    Io = 6,
    /// Output buffer shorter than the data.
    BufferTooSmall = 7,
    Panic = 8,
}

/// Environment handle.
pub struct UccrlEnv {
    inner: EnvDescriptor,
}

/// Finished run handle.
pub struct UccrlRun {
    record: RunRecord,
}

/// Agent settings. Zero or negative fields fall back to defaults:
/// `cells_per_axis = 0` picks n from the horizon, `lipschitz`/`alpha` come
/// from the environment, `span_bound` uses `ln T`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct UccrlAgentOptions {
    pub cells_per_axis: usize,
    pub delta: f64,
    pub lipschitz: f64,
    pub alpha: f64,
    pub span_bound: f64,
    pub span_truncation: bool,
    /// Restart with doubling horizons instead of a fixed horizon.
    pub anytime: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn fail(status: UccrlStatus, message: impl Into<String>) -> UccrlStatus {
    set_last_error(message.into());
    status
}

fn status_of(err: &UccrlError) -> UccrlStatus {
    match err {
        UccrlError::InvalidArgument(_) | UccrlError::Config { .. } => UccrlStatus::InvalidArgument,
        UccrlError::NonConvergence { .. } => UccrlStatus::NonConvergence,
        UccrlError::Unsupported(_) => UccrlStatus::Unsupported,
        UccrlError::TooLarge(_) => UccrlStatus::TooLarge,
        UccrlError::Io(_) => UccrlStatus::Io,
    }
}

/// Runs `body`, mapping library errors and panics to status codes.
fn guard(body: impl FnOnce() -> Result<(), UccrlStatus>) -> UccrlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => UccrlStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(UccrlStatus::Panic, "panic inside uccrl"),
    }
}

fn lift<T>(result: uccrl::Result<T>) -> Result<T, UccrlStatus> {
    result.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn null(what: &str) -> UccrlStatus {
    fail(UccrlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), UccrlStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn slice_in<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], UccrlStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, capacity: usize) -> Result<(), UccrlStatus> {
    if capacity < src.len() {
        return Err(fail(
            UccrlStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, need {}", src.len()),
        ));
    }
    if !src.is_empty() {
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn uccrl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Defaults: auto n, delta 0.1, regularity from the environment.
#[no_mangle]
pub extern "C" fn uccrl_agent_options_default() -> UccrlAgentOptions {
    UccrlAgentOptions {
        cells_per_axis: 0,
        delta: 0.1,
        lipschitz: 0.0,
        alpha: 0.0,
        span_bound: 0.0,
        span_truncation: false,
        anytime: false,
    }
}

/// Piecewise-constant hard instance with `n_cells * reward_actions` arms.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn uccrl_env_new_lower_bound(
    n_cells: usize,
    reward_actions: usize,
    epsilon: f64,
    seed: u64,
    out: *mut *mut UccrlEnv,
) -> UccrlStatus {
    guard(|| {
        let inner = lift(make_lower_bound_env(n_cells, reward_actions, epsilon, seed))?;
        write_out(out, UccrlEnv { inner })
    })
}

/// Built-in smooth family by name, e.g. `"wrapped-kernel"`.
///
/// # Safety
/// `family` must be a nul-terminated string and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn uccrl_env_new_smooth(
    family: *const c_char,
    dimension: usize,
    num_actions: usize,
    lipschitz: f64,
    alpha: f64,
    seed: u64,
    out: *mut *mut UccrlEnv,
) -> UccrlStatus {
    guard(|| {
        if family.is_null() {
            return Err(null("family"));
        }
        let family = CStr::from_ptr(family)
            .to_str()
            .map_err(|_| fail(UccrlStatus::InvalidArgument, "family is not UTF-8"))?;
        let holder = lift(HolderParams::new(lipschitz, alpha))?;
        let inner = lift(make_smooth_env(family, dimension, num_actions, holder, seed))?;
        write_out(out, UccrlEnv { inner })
    })
}

/// # Safety
/// `env` must come from a constructor and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn uccrl_env_free(env: *mut UccrlEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Dimension of the state space, 0 for a null handle.
///
/// # Safety
/// `env` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn uccrl_env_dimension(env: *const UccrlEnv) -> usize {
    env.as_ref().map_or(0, |e| e.inner.dimension())
}

/// Number of actions, 0 for a null handle.
///
/// # Safety
/// `env` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn uccrl_env_num_actions(env: *const UccrlEnv) -> usize {
    env.as_ref().map_or(0, |e| e.inner.num_actions())
}

/// Optimal gain: exact when known in closed form, otherwise from the
/// aggregation with `fine_n` cells per axis together with an error bound.
///
/// # Safety
/// `env` must be a live handle; `gain` and `error_bound` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn uccrl_env_optimal_gain(
    env: *const UccrlEnv,
    fine_n: usize,
    gain: *mut f64,
    error_bound: *mut f64,
) -> UccrlStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("env"))?;
        if gain.is_null() || error_bound.is_null() {
            return Err(null("output pointer"));
        }
        let estimate = lift(optimal_gain_oracle(&env.inner, fine_n))?;
        *gain = estimate.gain;
        *error_bound = estimate.error_bound;
        Ok(())
    })
}

fn agent_config(env: &EnvDescriptor, options: &UccrlAgentOptions) -> uccrl::Result<AgentConfig> {
    let declared = env.holder();
    let lipschitz = if options.lipschitz > 0.0 {
        options.lipschitz
    } else {
        declared.lipschitz()
    };
    let alpha = if options.alpha > 0.0 {
        options.alpha
    } else {
        declared.alpha()
    };
    let mut config = AgentConfig::new(HolderParams::new(lipschitz, alpha)?).with_delta(options.delta);
    if options.cells_per_axis > 0 {
        config = config.with_cells(options.cells_per_axis);
    }
    if options.span_bound > 0.0 {
        config.span_bound = SpanBound::Value(options.span_bound);
    }
    config.span_truncation = options.span_truncation;
    config.validate()?;
    Ok(config)
}

/// Runs the agent for `horizon` steps. A null `options` means defaults.
///
/// # Safety
/// `env` must be a live handle, `options` null or valid, `out` valid for
/// writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn uccrl_run(
    env: *const UccrlEnv,
    options: *const UccrlAgentOptions,
    horizon: u64,
    seed: u64,
    out: *mut *mut UccrlRun,
) -> UccrlStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("env"))?;
        let options = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| uccrl_agent_options_default());
        let config = lift(agent_config(&env.inner, &options))?;
        let record = if options.anytime {
            lift(run_uccrl_anytime(&env.inner, &config, horizon, seed))?
        } else {
            lift(run_uccrl(&env.inner, &config, horizon, seed))?
        };
        write_out(out, UccrlRun { record })
    })
}

/// # Safety
/// `run` must come from [`uccrl_run`] and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn uccrl_run_free(run: *mut UccrlRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Steps taken, 0 for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn uccrl_run_len(run: *const UccrlRun) -> usize {
    run.as_ref().map_or(0, |r| r.record.len())
}

/// Episodes that ended by the doubling rule, 0 for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn uccrl_run_completed_episodes(run: *const UccrlRun) -> usize {
    run.as_ref().map_or(0, |r| r.record.completed_episodes())
}

/// Sum of rewards, NaN for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn uccrl_run_total_reward(run: *const UccrlRun) -> f64 {
    run.as_ref().map_or(f64::NAN, |r| r.record.total_reward())
}

/// 1 if the run stopped early because planning failed, else 0.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn uccrl_run_aborted(run: *const UccrlRun) -> bool {
    run.as_ref().is_some_and(|r| r.record.abort.is_some())
}

/// Copies per-step rewards into `out`, which must hold `uccrl_run_len` values.
///
/// # Safety
/// `run` must be a live handle and `out` valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn uccrl_run_rewards(run: *const UccrlRun, out: *mut f64, capacity: usize) -> UccrlStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        copy_out(run.record.rewards(), out, capacity)
    })
}

/// Copies per-step actions into `out`.
///
/// # Safety
/// `run` must be a live handle and `out` valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn uccrl_run_actions(run: *const UccrlRun, out: *mut usize, capacity: usize) -> UccrlStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let actions: Vec<usize> = (0..run.record.len()).map(|t| run.record.action(t)).collect();
        copy_out(&actions, out, capacity)
    })
}

/// Copies cumulative regret `t * rho_star - sum of rewards` into `out`.
///
/// # Safety
/// `run` must be a live handle and `out` valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn uccrl_run_regret(
    run: *const UccrlRun,
    rho_star: f64,
    out: *mut f64,
    capacity: usize,
) -> UccrlStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let regret = lift(uccrl::agent::regret_of(&run.record, rho_star))?;
        copy_out(&regret, out, capacity)
    })
}

/// Gain and bias of a stationary policy on a finite unichain MDP.
/// `rewards` is `states * actions` row-major by state, `transitions` is
/// `states * actions * states`, `bias` receives `states` values.
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn uccrl_solve_poisson(
    states: usize,
    actions: usize,
    rewards: *const f64,
    transitions: *const f64,
    policy: *const usize,
    gain: *mut f64,
    bias: *mut f64,
) -> UccrlStatus {
    guard(|| {
        let rewards = slice_in(rewards, states * actions, "rewards")?;
        let transitions = slice_in(transitions, states * actions * states, "transitions")?;
        let policy = slice_in(policy, states, "policy")?;
        if gain.is_null() {
            return Err(null("gain"));
        }
        let mdp = lift(FiniteMdp::new(states, actions, rewards.to_vec(), transitions.to_vec()))?;
        let solution = lift(solve_poisson(&mdp, policy))?;
        copy_out(&solution.bias, bias, states)?;
        *gain = solution.gain;
        Ok(())
    })
}
