//! Experiment specifications, their resolution against defaults and model
//! files, dispatch to the computational modules, and atomic output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conjugate::{ConjugateModel, Family};
use crate::diagnostics::{conjugate_diagnostics, discrete_diagnostics, DiagnosticsReport};
use crate::equilibrium::{best_response_set, BestResponse, EquilibriumRule, Strategy};
use crate::grid::SimplexGrid;
use crate::error::{Error, Result};
use crate::figures::{conjugate_figure, diagonal_slices, simplex_figure, slice_csv_files, SLICE_PLAYERS};
use crate::hjb::{build_value_field, hjb_check, vertex_boundary_check};
use crate::model::{Belief, LevyModel, Payoffs};
use crate::montecarlo::{
    checkpoint_estimates, convergence_diagnostics, deviation_family, estimate_lra_payoff, simulate, Conditioning,
    PathEnsemble, SimConfig,
};
use crate::stats::MeanSe;

pub const SCHEMA_VERSION: u32 = 1;

/// Payoff means, k₀ and N of the simplex figures.
pub const FIGURE_MU: [f64; 3] = [2.0, 5.0, 8.0];
pub const FIGURE_K0: f64 = 0.2;
pub const FIGURE_PLAYERS: usize = 4;
pub const FIGURE_GRID: usize = 200;
/// Resolution of the equilibrium table when no beliefs are given.
pub const DEFAULT_GRID: usize = 100;
/// (mean, variance) window of the conjugate figures.
pub const CONJUGATE_MEAN_RANGE: [f64; 2] = [0.05, 6.0];
pub const CONJUGATE_VARIANCE_RANGE: [f64; 2] = [0.05, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Equilibrium,
    Simulate,
    Payoff,
    HjbCheck,
    Figure1,
    Figure2,
    Figure3,
    Figure4,
    Figure5,
    Diagnostics,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Equilibrium => "equilibrium",
            Command::Simulate => "simulate",
            Command::Payoff => "payoff",
            Command::HjbCheck => "hjb-check",
            Command::Figure1 => "figure1",
            Command::Figure2 => "figure2",
            Command::Figure3 => "figure3",
            Command::Figure4 => "figure4",
            Command::Figure5 => "figure5",
            Command::Diagnostics => "diagnostics",
        }
    }
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Normal => "normal",
        Family::Gamma => "gamma",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_players: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub overrides: Overrides,
    /// Strategy profile, e.g. `eq`, `const:0`, `eq/eq/const:1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    /// Beliefs (π₁, …, π_L) to evaluate at; defaults to the model prior.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beliefs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<Conditioning>,
    /// Also evaluate the fixed deviation family (payoff command).
    #[serde(default)]
    pub deviations: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentSpec {
    pub fn new(command: Command) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            model: None,
            overrides: Overrides::default(),
            profile: None,
            beliefs: Vec::new(),
            conditioning: None,
            deviations: false,
            output: None,
            format: OutputFormat::Json,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        if spec.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", spec.schema_version),
            ));
        }
        Ok(spec)
    }
}

/// A loaded model file.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Discrete(LevyModel),
    Conjugate(ConjugateModel),
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)?;
    if value.get("family").is_some() {
        Ok(LoadedModel::Conjugate(ConjugateModel::from_json(&text)?))
    } else {
        Ok(LoadedModel::Discrete(LevyModel::from_json(&text)?))
    }
}

fn check_positive(field: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(Error::invalid(field, format!("must be finite and > 0 (got {x})"))),
        _ => Ok(()),
    }
}

fn validate_overrides(o: &Overrides) -> Result<()> {
    check_positive("k0", o.k0)?;
    check_positive("dt", o.dt)?;
    check_positive("horizon", o.horizon)?;
    if let Some(s) = o.s {
        if !s.is_finite() {
            return Err(Error::invalid("s", "must be finite"));
        }
    }
    if o.n_players == Some(0) {
        return Err(Error::invalid("n_players", "must be >= 1"));
    }
    if o.paths == Some(0) {
        return Err(Error::invalid("paths", "must be >= 1"));
    }
    if matches!(o.grid, Some(g) if g < 2) {
        return Err(Error::invalid("grid", "must be >= 2"));
    }
    Ok(())
}

fn discrete(spec: &ExperimentSpec) -> Result<LevyModel> {
    let path = spec
        .model
        .as_ref()
        .ok_or_else(|| Error::invalid("model", format!("`{}` needs a model file", spec.command.name())))?;
    match load_model(path)? {
        LoadedModel::Discrete(m) => m.with_overrides(spec.overrides.s, spec.overrides.k0, spec.overrides.n_players),
        LoadedModel::Conjugate(_) => Err(Error::invalid("model", "expected a discrete-state model file")),
    }
}

fn beliefs_of(spec: &ExperimentSpec, model: &LevyModel) -> Result<Vec<Belief>> {
    if spec.beliefs.is_empty() {
        return Ok(vec![model.prior().clone()]);
    }
    spec.beliefs
        .iter()
        .map(|b| {
            if b.len() != model.dim() {
                return Err(Error::invalid(
                    "belief",
                    format!("expected {} probabilities (pi_1..pi_L), got {}", model.dim(), b.len()),
                ));
            }
            Belief::new(b)
        })
        .collect()
}

/// Fills every default the command uses so the echoed spec is complete.
pub fn resolve(spec: &ExperimentSpec) -> Result<ExperimentSpec> {
    validate_overrides(&spec.overrides)?;
    let mut r = spec.clone();
    r.schema_version = SCHEMA_VERSION;
    let o = &mut r.overrides;
    match spec.command {
        Command::Equilibrium => {
            if spec.beliefs.is_empty() {
                o.grid.get_or_insert(DEFAULT_GRID);
            }
        }
        Command::Simulate | Command::Payoff => {
            let m = discrete(spec)?;
            let d = SimConfig::default_for(&m);
            o.paths.get_or_insert(d.n_paths);
            o.dt.get_or_insert(d.dt);
            o.horizon.get_or_insert(d.horizon);
            o.seed.get_or_insert(0);
            r.profile.get_or_insert_with(|| "eq".into());
            r.conditioning.get_or_insert(Conditioning::PriorMixture);
        }
        Command::HjbCheck => {
            let m = discrete(spec)?;
            let d = SimConfig::default_for(&m);
            o.grid.get_or_insert(if m.dim() == 1 { 40 } else { 20 });
            o.paths.get_or_insert(d.n_paths);
            o.dt.get_or_insert(1e-2);
            o.horizon.get_or_insert(d.horizon.min(40.0));
            o.seed.get_or_insert(0);
            r.conditioning = Some(Conditioning::Stratified);
        }
        Command::Figure1 | Command::Figure2 | Command::Figure3 => {
            if spec.model.is_none() {
                o.s.get_or_insert(if spec.command == Command::Figure2 { 4.0 } else { 6.0 });
                o.k0.get_or_insert(FIGURE_K0);
                o.n_players.get_or_insert(FIGURE_PLAYERS);
            }
            o.grid.get_or_insert(FIGURE_GRID);
        }
        Command::Figure4 | Command::Figure5 => {
            if spec.model.is_none() {
                o.s.get_or_insert(6.0);
                o.k0.get_or_insert(FIGURE_K0);
                o.n_players.get_or_insert(FIGURE_PLAYERS);
            }
            o.grid.get_or_insert(FIGURE_GRID);
        }
        Command::Diagnostics => {}
    }
    Ok(r)
}

/// Result of one run: the JSON document and any CSV files (name, contents).
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub json: Value,
    pub files: Vec<(String, String)>,
}

fn envelope(spec: &ExperimentSpec, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "spec": spec,
        "result": result,
    })
}

fn sim_config(spec: &ExperimentSpec) -> SimConfig {
    let o = &spec.overrides;
    let mut c = SimConfig::new(
        o.horizon.unwrap_or(1.0),
        o.dt.unwrap_or(1e-3),
        o.paths.unwrap_or(1),
        o.seed.unwrap_or(0),
    );
    c.conditioning = spec.conditioning.unwrap_or(Conditioning::PriorMixture);
    c
}

fn ensemble_summary(ens: &PathEnsemble, model: &LevyModel) -> Result<Value> {
    let estimates = (0..model.n_players())
        .map(|n| estimate_lra_payoff(ens, model, n))
        .collect::<Result<Vec<_>>>()?;
    let pi_t: Vec<MeanSe> = (0..model.n_states())
        .map(|l| MeanSe::of(&ens.unit_values(|p| p.final_belief[l])))
        .collect();
    let rates = if model.dim() == 1 {
        Some(convergence_diagnostics(ens, model)?)
    } else {
        None
    };
    Ok(json!({
        "config": ens.config,
        "profile": ens.profile,
        "estimates": estimates,
        "final_belief": pi_t,
        "initial_belief": ens.initial_belief,
        "simplex_corrections": ens.simplex_corrections(),
        "convergence": rates,
    }))
}

fn curves_csv(ens: &PathEnsemble) -> Result<String> {
    let c = &ens.curves;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((0..ens.n_states()).map(|l| format!("pi{l}")));
    header.push("m".into());
    header.push("f".into());
    header.extend((0..ens.n_players).map(|n| format!("integrand{n}")));
    w.write_record(&header).map_err(csv_error)?;
    for (i, t) in c.times.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(c.belief[i].iter().map(|&x| num(x)));
        row.push(num(c.m[i]));
        row.push(num(c.f[i]));
        row.extend(c.integrand[i].iter().map(|&x| num(x)));
        w.write_record(&row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(csv_error)?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row of the equilibrium table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    /// (π₁, …, π_L).
    pub belief: Vec<f64>,
    pub m: f64,
    pub f: f64,
    /// I(π); `inf` when m(π) ≥ s.
    pub incentive: f64,
    pub kappa: f64,
    pub regime: u8,
    pub best_response: BestResponse,
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        x.to_string()
    }
}

/// Columns: pi1..piL, m, f, incentive, kappa.
fn equilibrium_csv(dim: usize, rows: &[EquilibriumPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=dim).map(|l| format!("pi{l}")).collect();
    header.extend(["m", "f", "incentive", "kappa"].map(String::from));
    w.write_record(&header).map_err(csv_error)?;
    for r in rows {
        let mut row: Vec<String> = r.belief.iter().map(|&x| num(x)).collect();
        row.extend([num(r.m), num(r.f), num(r.incentive), num(r.kappa)]);
        w.write_record(&row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(csv_error)?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn figure_params(spec: &ExperimentSpec) -> Result<(Payoffs, EquilibriumRule)> {
    let o = &spec.overrides;
    let (payoffs, k0, n) = match &spec.model {
        Some(_) => {
            let m = discrete(spec)?;
            (m.payoffs().clone(), m.k0(), m.n_players())
        }
        None => (
            Payoffs::new(FIGURE_MU.to_vec(), o.s.unwrap_or(6.0))?,
            o.k0.unwrap_or(FIGURE_K0),
            o.n_players.unwrap_or(FIGURE_PLAYERS),
        ),
    };
    Ok((payoffs, EquilibriumRule::new(k0, n)?))
}

fn conjugate_params(spec: &ExperimentSpec, family: Family) -> Result<(f64, EquilibriumRule)> {
    let o = &spec.overrides;
    match &spec.model {
        Some(path) => match load_model(path)? {
            LoadedModel::Conjugate(m) if m.family() == family => Ok((
                o.s.unwrap_or(m.safe_payoff()),
                EquilibriumRule::new(o.k0.unwrap_or(m.k0()), o.n_players.unwrap_or(m.n_players()))?,
            )),
            _ => Err(Error::invalid(
                "model",
                format!("`{}` needs a {} conjugate model file", spec.command.name(), family_name(family)),
            )),
        },
        None => Ok((
            o.s.unwrap_or(6.0),
            EquilibriumRule::new(o.k0.unwrap_or(FIGURE_K0), o.n_players.unwrap_or(FIGURE_PLAYERS))?,
        )),
    }
}

/// Resolves and runs `spec`.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    let spec = resolve(spec)?;
    let mut files = Vec::new();
    let result = match spec.command {
        Command::Equilibrium => {
            let m = discrete(&spec)?;
            let rule = EquilibriumRule::of(&m);
            let beliefs = match spec.overrides.grid {
                Some(g) if spec.beliefs.is_empty() => {
                    let grid = SimplexGrid::new(m.dim(), g)?;
                    (0..grid.len()).map(|i| grid.belief(i)).collect()
                }
                _ => beliefs_of(&spec, &m)?,
            };
            let rows = beliefs
                .iter()
                .map(|pi| {
                    let i = m.incentive(pi)?;
                    let k = rule.action(i);
                    Ok(EquilibriumPoint {
                        belief: pi.probs().to_vec(),
                        m: m.payoffs().m(pi),
                        f: m.payoffs().f(pi),
                        incentive: i.as_f64(),
                        kappa: k,
                        regime: rule.regime(i),
                        best_response: best_response_set(&m, pi, k)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            files.push(("equilibrium.csv".to_string(), equilibrium_csv(m.dim(), &rows)?));
            json!({ "rule": rule, "points": rows })
        }
        Command::Simulate => {
            let m = discrete(&spec)?;
            let profile = Strategy::parse_profile(spec.profile.as_deref().unwrap_or("eq"), &m)?;
            let ens = simulate(&m, &profile, &sim_config(&spec))?;
            files.push(("curves.csv".to_string(), curves_csv(&ens)?));
            ensemble_summary(&ens, &m)?
        }
        Command::Payoff => {
            let m0 = discrete(&spec)?;
            let mut out = Vec::new();
            for pi in beliefs_of(&spec, &m0)? {
                let m = m0.with_prior(pi.clone())?;
                let profile = Strategy::parse_profile(spec.profile.as_deref().unwrap_or("eq"), &m)?;
                let cfg = sim_config(&spec).with_checkpoints(vec![
                    0.25 * spec.overrides.horizon.unwrap_or(1.0),
                    0.5 * spec.overrides.horizon.unwrap_or(1.0),
                ]);
                let ens = simulate(&m, &profile, &cfg)?;
                let estimates = (0..m.n_players())
                    .map(|n| estimate_lra_payoff(&ens, &m, n))
                    .collect::<Result<Vec<_>>>()?;
                let deviations = if spec.deviations {
                    Some(deviation_family(&m, &pi, &cfg)?)
                } else {
                    None
                };
                out.push(json!({
                    "belief": pi.full(),
                    "estimates": estimates,
                    "checkpoints": checkpoint_estimates(&ens, &m, 0)?,
                    "deviations": deviations,
                }));
            }
            json!({ "points": out })
        }
        Command::HjbCheck => {
            let m = discrete(&spec)?;
            let cfg = sim_config(&spec);
            let field = build_value_field(&m, &cfg, spec.overrides.grid.unwrap_or(40))?;
            let report = hjb_check(&field, &m, 3.0)?;
            let vertices = vertex_boundary_check(&field, &m);
            json!({ "field": field, "report": report, "vertices": vertices })
        }
        Command::Figure1 | Command::Figure2 => {
            let (payoffs, rule) = figure_params(&spec)?;
            let fig = simplex_figure(&payoffs, rule, spec.overrides.grid.unwrap_or(FIGURE_GRID))?;
            let prefix = if spec.command == Command::Figure1 { "figure1" } else { "figure2" };
            files.extend(fig.csv_files(prefix)?);
            serde_json::to_value(&fig)?
        }
        Command::Figure3 => {
            let (payoffs, rule) = figure_params(&spec)?;
            let samples = spec.overrides.grid.unwrap_or(FIGURE_GRID) + 1;
            let slices = diagonal_slices(&payoffs, rule.k0, &SLICE_PLAYERS, samples)?;
            files.extend(slice_csv_files(&slices, "figure3")?);
            json!({ "mu": payoffs.mu, "safe_payoff": payoffs.safe, "k0": rule.k0, "slices": slices })
        }
        Command::Figure4 | Command::Figure5 => {
            let family = if spec.command == Command::Figure4 { Family::Normal } else { Family::Gamma };
            let (s, rule) = conjugate_params(&spec, family)?;
            let fig = conjugate_figure(
                family,
                s,
                rule,
                CONJUGATE_MEAN_RANGE,
                CONJUGATE_VARIANCE_RANGE,
                spec.overrides.grid.unwrap_or(FIGURE_GRID),
            )?;
            let prefix = if family == Family::Normal { "figure4" } else { "figure5" };
            files.extend(fig.csv_files(prefix)?);
            serde_json::to_value(&fig)?
        }
        Command::Diagnostics => {
            let path = spec
                .model
                .as_ref()
                .ok_or_else(|| Error::invalid("model", "diagnostics needs a model file"))?;
            let report = match load_model(path)? {
                LoadedModel::Conjugate(c) => DiagnosticsReport::Conjugate(conjugate_diagnostics(&c)?),
                LoadedModel::Discrete(_) => {
                    let m = discrete(&spec)?;
                    let cfg = spec.overrides.paths.map(|_| {
                        let mut c = sim_config(&spec);
                        if spec.overrides.horizon.is_none() {
                            c.horizon = SimConfig::default_for(&m).horizon;
                        }
                        if spec.overrides.dt.is_none() {
                            c.dt = 1e-2;
                        }
                        c
                    });
                    DiagnosticsReport::Discrete(discrete_diagnostics(&m, cfg.as_ref())?)
                }
            };
            serde_json::to_value(&report)?
        }
    };
    Ok(RunOutput {
        json: envelope(&spec, result),
        files,
    })
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid("output", format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Persists a run. JSON goes to `output` as a file. CSV output to a `.csv`
/// path holding a single table writes that table and the resolved run as
/// `<output>.spec.json`; otherwise `output` is a directory receiving every
/// table plus `spec.json`. Returns the JSON text when no output path is set.
pub fn persist(out: &RunOutput, output: Option<&Path>, format: OutputFormat) -> Result<Option<String>> {
    let text = serde_json::to_string_pretty(&out.json)?;
    match (output, format) {
        (None, _) => Ok(Some(text)),
        (Some(p), OutputFormat::Json) => {
            write_atomic(p, text.as_bytes())?;
            Ok(None)
        }
        (Some(p), OutputFormat::Csv) if is_csv_path(p) && out.files.len() == 1 => {
            write_atomic(p, out.files[0].1.as_bytes())?;
            let mut sidecar = p.as_os_str().to_owned();
            sidecar.push(".spec.json");
            write_atomic(Path::new(&sidecar), text.as_bytes())?;
            Ok(None)
        }
        (Some(p), OutputFormat::Csv) if is_csv_path(p) => Err(Error::invalid(
            "output",
            format!("this command writes {} tables; give a directory", out.files.len()),
        )),
        (Some(dir), OutputFormat::Csv) => {
            fs::create_dir_all(dir)?;
            for (name, body) in &out.files {
                write_atomic(&dir.join(name), body.as_bytes())?;
            }
            write_atomic(&dir.join("spec.json"), text.as_bytes())?;
            Ok(None)
        }
    }
}

pub fn is_csv_path(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Machine-readable description of an error for stderr.
pub fn error_json(e: &Error) -> Value {
    let kind = match e {
        Error::Invalid { .. } => "invalid",
        Error::StateOutOfRange { .. } => "state_out_of_range",
        Error::InvalidObservation { .. } => "invalid_observation",
        Error::Domain(_) => "domain",
        Error::NonFiniteBelief { .. } => "non_finite_belief",
        Error::Mismatch(_) => "mismatch",
        Error::Numerical(_) => "numerical",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    };
    let mut v = json!({ "error": kind, "message": e.to_string() });
    match e {
        Error::Invalid { field, .. } => v["field"] = json!(field),
        Error::NonFiniteBelief { path_seed, step } => {
            v["path_seed"] = json!(path_seed);
            v["step"] = json!(step);
        }
        _ => {}
    }
    v
}

/// Process exit code for an error: 1 for bad input, 2 for numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        1
    } else {
        2
    }
}
