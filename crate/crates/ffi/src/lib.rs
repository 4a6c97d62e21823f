//! C ABI over the levyexp laboratory.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `lx_*_free`. Every fallible call returns an [`LxStatus`] and
//! records a message retrievable with [`lx_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use levyexp::equilibrium::{best_response_set, equilibrium_action, BestResponse, Strategy};
use levyexp::experiment::{run, ExperimentSpec};
use levyexp::model::{Belief, LevyModel};
use levyexp::montecarlo::{estimate_lra_payoff, simulate, PathEnsemble, SimConfig};
use levyexp::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

/// Best-response classification codes.
pub const LX_BEST_RESPONSE_ZERO: i32 = 0;
pub const LX_BEST_RESPONSE_ONE: i32 = 1;
pub const LX_BEST_RESPONSE_ALL: i32 = 2;

/// A validated discrete-state model.
pub struct LxModel {
    inner: LevyModel,
}

/// A simulated path ensemble.
pub struct LxEnsemble {
    inner: PathEnsemble,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LxStatus {
    match e {
        Error::Io(_) => LxStatus::Io,
        e if e.is_validation() => LxStatus::InvalidArgument,
        _ => LxStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), LxStatus>) -> LxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LxStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            LxStatus::Panic
        }
    }
}

fn fail(e: Error) -> LxStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> LxStatus {
    set_error(format!("`{what}` is null"));
    LxStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, LxStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("`{what}` is not valid UTF-8"));
        LxStatus::InvalidArgument
    })
}

unsafe fn model_arg<'a>(p: *const LxModel) -> Result<&'a LevyModel, LxStatus> {
    p.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn belief_arg(probs: *const f64, len: usize) -> Result<Belief, LxStatus> {
    if probs.is_null() {
        return Err(null("probs"));
    }
    Belief::new(std::slice::from_raw_parts(probs, len)).map_err(fail)
}

/// Message of the last error on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn lx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a model from its JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn lx_model_from_json(json: *const c_char, out: *mut *mut LxModel) -> LxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        let inner = LevyModel::from_json(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(LxModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`lx_model_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lx_model_free(model: *mut LxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of non-reference states L (beliefs are passed as π₁, …, π_L).
///
/// # Safety
/// `model` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn lx_model_dim(model: *const LxModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// Incentive I(π); writes +∞ when m(π) ≥ s.
///
/// # Safety
/// `probs` must point to `len` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn lx_incentive(model: *const LxModel, probs: *const f64, len: usize, out: *mut f64) -> LxStatus {
    guard(|| {
        let m = model_arg(model)?;
        let pi = belief_arg(probs, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.incentive(&pi).map_err(fail)?.as_f64();
        Ok(())
    })
}

/// Symmetric equilibrium action κ†(π).
///
/// # Safety
/// As [`lx_incentive`].
#[no_mangle]
pub unsafe extern "C" fn lx_equilibrium_action(
    model: *const LxModel,
    probs: *const f64,
    len: usize,
    out: *mut f64,
) -> LxStatus {
    guard(|| {
        let m = model_arg(model)?;
        let pi = belief_arg(probs, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = equilibrium_action(m, &pi).map_err(fail)?;
        Ok(())
    })
}

/// Best-response set against opponents playing `opponents_action`, as one of
/// the `LX_BEST_RESPONSE_*` codes.
///
/// # Safety
/// As [`lx_incentive`], with `out` pointing to one writable int32.
#[no_mangle]
pub unsafe extern "C" fn lx_best_response(
    model: *const LxModel,
    probs: *const f64,
    len: usize,
    opponents_action: f64,
    out: *mut i32,
) -> LxStatus {
    guard(|| {
        let m = model_arg(model)?;
        let pi = belief_arg(probs, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match best_response_set(m, &pi, opponents_action).map_err(fail)? {
            BestResponse::Zero => LX_BEST_RESPONSE_ZERO,
            BestResponse::One => LX_BEST_RESPONSE_ONE,
            BestResponse::AllOfUnitInterval => LX_BEST_RESPONSE_ALL,
        };
        Ok(())
    })
}

/// Simulates `profile` (e.g. "eq", "const:0", "eq/eq/const:1") from the
/// model prior.
///
/// # Safety
/// `model` must be live, `profile` nul-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lx_simulate(
    model: *const LxModel,
    profile: *const c_char,
    horizon: f64,
    dt: f64,
    paths: usize,
    seed: u64,
    out: *mut *mut LxEnsemble,
) -> LxStatus {
    guard(|| {
        let m = model_arg(model)?;
        let text = str_arg(profile, "profile")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let strategies = Strategy::parse_profile(text, m).map_err(fail)?;
        let cfg = SimConfig::new(horizon, dt, paths, seed);
        let inner = simulate(m, &strategies, &cfg).map_err(fail)?;
        *out = Box::into_raw(Box::new(LxEnsemble { inner }));
        Ok(())
    })
}

/// # Safety
/// `ensemble` must come from [`lx_simulate`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lx_ensemble_free(ensemble: *mut LxEnsemble) {
    if !ensemble.is_null() {
        drop(Box::from_raw(ensemble));
    }
}

/// Long-run average payoff estimate for `player`: mean shortfall over the
/// horizon, its standard error, and the separately reported tail bound.
///
/// # Safety
/// Handles must be live; the three outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn lx_ensemble_estimate(
    ensemble: *const LxEnsemble,
    model: *const LxModel,
    player: usize,
    estimate: *mut f64,
    standard_error: *mut f64,
    tail_bound: *mut f64,
) -> LxStatus {
    guard(|| {
        let ens = ensemble.as_ref().map(|e| &e.inner).ok_or_else(|| null("ensemble"))?;
        let m = model_arg(model)?;
        if estimate.is_null() || standard_error.is_null() || tail_bound.is_null() {
            return Err(null("output"));
        }
        let e = estimate_lra_payoff(ens, m, player).map_err(fail)?;
        *estimate = e.estimate;
        *standard_error = e.standard_error;
        *tail_bound = e.tail_bound;
        Ok(())
    })
}

/// Runs an experiment spec given as JSON and returns the result document.
/// Free the returned string with [`lx_string_free`].
///
/// # Safety
/// `spec_json` must be nul-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lx_run_experiment(spec_json: *const c_char, out: *mut *mut c_char) -> LxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(spec_json, "spec_json")?;
        let spec = ExperimentSpec::from_json(text).map_err(fail)?;
        let result = run(&spec).map_err(fail)?;
        let body = serde_json::to_string(&result.json).map_err(|e| fail(e.into()))?;
        *out = CString::new(body).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
