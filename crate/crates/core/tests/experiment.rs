use levyexp::experiment::{resolve, run, Command, ExperimentSpec, OutputFormat, SCHEMA_VERSION};

#[test]
fn figure_defaults_are_resolved_and_echoed() {
    let spec = ExperimentSpec::new(Command::Figure2);
    let r = resolve(&spec).unwrap();
    assert_eq!(r.overrides.s, Some(4.0));
    assert_eq!(r.overrides.k0, Some(0.2));
    assert_eq!(r.overrides.n_players, Some(4));
    assert_eq!(r.overrides.grid, Some(200));
    let out = run(&spec).unwrap();
    assert_eq!(out.json["schema_version"], SCHEMA_VERSION);
    let echoed = ExperimentSpec::from_json(&out.json["spec"].to_string()).unwrap();
    assert_eq!(echoed, r);
}

#[test]
fn figures_are_deterministic() {
    let mut spec = ExperimentSpec::new(Command::Figure5);
    spec.overrides.grid = Some(40);
    let a = run(&spec).unwrap();
    let b = run(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.files[0].0, "figure5_grid.csv");
    assert!(a.files[0].1.starts_with("mean,variance,kappa"));
}

#[test]
fn invalid_overrides_fail_before_work() {
    let mut spec = ExperimentSpec::new(Command::Figure1);
    spec.overrides.grid = Some(1);
    let e = run(&spec).unwrap_err();
    assert!(e.is_validation());
    let mut spec = ExperimentSpec::new(Command::Simulate);
    spec.format = OutputFormat::Csv;
    assert!(run(&spec).unwrap_err().is_validation());
}

#[test]
fn unknown_schema_version_is_rejected() {
    let e = ExperimentSpec::from_json(r#"{ "schema_version": 9, "command": "figure1" }"#).unwrap_err();
    assert!(e.is_validation());
    let e = ExperimentSpec::from_json(r#"{ "schema_version": 1, "command": "figure1", "extra": 1 }"#).unwrap_err();
    assert!(e.is_validation());
}
