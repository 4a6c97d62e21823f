use std::ffi::{CStr, CString};
use std::ptr;

use levyexp_ffi::*;

const MODEL: &str = r#"{
  "states": [ { "rho": 0.0, "jumps": [] }, { "rho": 2.0, "jumps": [] } ],
  "sigma": 1.0, "safe_payoff": 1.0, "prior": [0.6, 0.4], "k0": 1.0, "n_players": 3
}"#;

fn model() -> *mut LxModel {
    let json = CString::new(MODEL).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { lx_model_from_json(json.as_ptr(), &mut m) }, LxStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = lx_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn incentive_and_action() {
    let m = model();
    assert_eq!(unsafe { lx_model_dim(m) }, 1);
    let p = [0.4];
    let (mut i, mut k) = (0.0, 0.0);
    unsafe {
        assert_eq!(lx_incentive(m, p.as_ptr(), 1, &mut i), LxStatus::Ok);
        assert_eq!(lx_equilibrium_action(m, p.as_ptr(), 1, &mut k), LxStatus::Ok);
    }
    // I = 0.4 / 0.2 = 2, κ† = (2 − 1)/2.
    assert!((i - 2.0).abs() < 1e-12);
    assert!((k - 0.5).abs() < 1e-12);
    let mut br = -1;
    assert_eq!(unsafe { lx_best_response(m, p.as_ptr(), 1, 0.5, &mut br) }, LxStatus::Ok);
    assert_eq!(br, LX_BEST_RESPONSE_ALL);
    let p = [0.6];
    unsafe { lx_incentive(m, p.as_ptr(), 1, &mut i) };
    assert!(i.is_infinite());
    unsafe { lx_model_free(m) };
}

#[test]
fn errors_set_status_and_message() {
    let bad = CString::new("{ \"states\": [] }").unwrap();
    let mut m = ptr::null_mut();
    let st = unsafe { lx_model_from_json(bad.as_ptr(), &mut m) };
    assert_eq!(st, LxStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(!last_error().is_empty());

    let m = model();
    let p = [1.5];
    let mut i = 0.0;
    assert_eq!(unsafe { lx_incentive(m, p.as_ptr(), 1, &mut i) }, LxStatus::InvalidArgument);
    assert_eq!(unsafe { lx_incentive(ptr::null(), p.as_ptr(), 1, &mut i) }, LxStatus::NullPointer);
    assert!(last_error().contains("model"));
    unsafe { lx_model_free(m) };
}

#[test]
fn simulate_and_estimate() {
    let m = model();
    let profile = CString::new("eq").unwrap();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { lx_simulate(m, profile.as_ptr(), 2.0, 0.01, 256, 3, &mut e) }, LxStatus::Ok);
    let (mut est, mut se, mut tail) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { lx_ensemble_estimate(e, m, 0, &mut est, &mut se, &mut tail) }, LxStatus::Ok);
    assert!(est <= 0.0 && se > 0.0 && tail >= 0.0);
    assert_eq!(unsafe { lx_ensemble_estimate(e, m, 7, &mut est, &mut se, &mut tail) }, LxStatus::InvalidArgument);
    unsafe {
        lx_ensemble_free(e);
        lx_model_free(m);
    }
}

#[test]
fn run_experiment_round_trip() {
    let spec = CString::new(r#"{ "schema_version": 1, "command": "figure3", "overrides": { "grid": 20 } }"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lx_run_experiment(spec.as_ptr(), &mut out) }, LxStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { lx_string_free(out) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["result"]["slices"].as_array().unwrap().len(), 5);
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(lx_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
