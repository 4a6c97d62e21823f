use std::path::Path;
use std::process::Command;

use levyexp::experiment::ExperimentSpec;

const BIN: &str = env!("CARGO_BIN_EXE_levyexp");

fn write_model(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("model.json");
    std::fs::write(
        &p,
        r#"{
  "states": [ { "rho": 0.0, "jumps": [] }, { "rho": 2.0, "jumps": [] } ],
  "sigma": 1.0, "safe_payoff": 1.0, "prior": [0.6, 0.4], "k0": 1.0, "n_players": 3
}"#,
    )
    .unwrap();
    p
}

#[test]
fn equilibrium_table_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path());
    let out = dir.path().join("eq.csv");
    let st = Command::new(BIN)
        .args(["equilibrium", "--model"])
        .arg(&model)
        .args(["--grid", "10", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("pi1,m,f,incentive,kappa"));
    assert_eq!(lines.count(), 11);
    assert!(text.contains(",inf,1"));
    let sidecar = std::fs::read_to_string(dir.path().join("eq.csv.spec.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&sidecar).unwrap();
    assert_eq!(v["spec"]["overrides"]["grid"], 10);
}

#[test]
fn figure_directory_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2");
    let st = Command::new(BIN).args(["figure2", "--grid", "50", "--out"]).arg(&out).status().unwrap();
    assert!(st.success());
    for name in ["figure2_kappa0.csv", "figure2_kappa1.csv", "figure2_kappa0.4.csv", "spec.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let header = std::fs::read_to_string(out.join("figure2_kappa0.csv")).unwrap();
    assert!(header.starts_with("segment,pi0,pi1,pi2,incentive,kappa"));
}

#[test]
fn json_result_round_trips_into_its_spec() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path());
    let out = dir.path().join("sim.json");
    let st = Command::new(BIN)
        .args(["simulate", "--model"])
        .arg(&model)
        .args(["--paths", "64", "--horizon", "2", "--dt", "0.01", "--seed", "4", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let spec = ExperimentSpec::from_json(&v["spec"].to_string()).unwrap();
    assert_eq!(spec.overrides.paths, Some(64));
    assert_eq!(spec.profile.as_deref(), Some("eq"));
    assert_eq!(serde_json::to_value(&spec).unwrap(), v["spec"]);

    // Replaying the echoed spec reproduces the result.
    let again = dir.path().join("again.json");
    let st = Command::new(BIN).arg("run").arg(&out).arg("--out").arg(&again).status().unwrap();
    assert!(st.success());
    let w: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&again).unwrap()).unwrap();
    assert_eq!(v["result"], w["result"]);
}

#[test]
fn exit_codes_and_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path());
    let o = Command::new(BIN).args(["equilibrium", "--model"]).arg(&model).args(["--k0", "-1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "invalid");
    assert_eq!(err["field"], "k0");

    let o = Command::new(BIN).args(["figure4", "--model"]).arg(&model).output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    let o = Command::new(BIN).args(["nonsense"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    let o = Command::new(BIN).args(["--threads", "1", "figure3", "--grid", "10"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn thread_count_from_environment() {
    let o = Command::new(BIN)
        .env("LEVYEXP_THREADS", "0")
        .args(["figure3", "--grid", "10"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn diagnostics_dispatch_on_model_kind() {
    let dir = tempfile::tempdir().unwrap();
    let conj = dir.path().join("gamma.json");
    std::fs::write(&conj, r#"{ "family": "gamma", "alpha": 2.0, "beta": 0.5, "safe_payoff": 6.0, "k0": 0.2, "n_players": 4 }"#)
        .unwrap();
    let o = Command::new(BIN).args(["diagnostics", "--model"]).arg(&conj).output().unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["kind"], "conjugate");
    assert!(v["result"]["gamma"].is_object());

    let model = write_model(dir.path());
    let o = Command::new(BIN).args(["diagnostics", "--model"]).arg(&model).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["kind"], "discrete");
    assert!(v["result"]["learning_rates"].is_object());
    assert!(v["result"]["jump_directions"].is_null());
}
