use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use levyexp::experiment::{
    error_json, exit_code, is_csv_path, persist, run, Command, ExperimentSpec, OutputFormat, Overrides,
};
use levyexp::montecarlo::Conditioning;
use levyexp::Error;

/// Undiscounted strategic experimentation with two-armed Lévy bandits.
#[derive(Debug, Parser)]
#[command(name = "levyexp", version)]
struct Cli {
    /// Worker threads for parallel computation.
    #[arg(long, global = true, env = "LEVYEXP_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Tabulate m, f, I and κ† over a simplex grid or at given beliefs.
    Equilibrium(Common),
    /// Simulate a strategy profile and estimate long-run average payoffs.
    Simulate(Common),
    /// Payoff estimates at given beliefs, optionally against the deviation family.
    Payoff(Common),
    /// Monte Carlo value field and HJB residuals.
    HjbCheck(Common),
    /// κ† boundaries and level curves on the simplex (s = 6).
    Figure1(Common),
    /// As figure1 with s = 4.
    Figure2(Common),
    /// κ† along the diagonal π₁ = π₂ for N = 2, 4, 6, 8, 10.
    Figure3(Common),
    /// κ† over (mean, variance) for the normal conjugate family.
    Figure4(Common),
    /// κ† over (mean, variance) for the gamma conjugate family.
    Figure5(Common),
    /// Learning rates, jump directions, Lipschitz and strategy-class checks.
    Diagnostics(Common),
    /// Replay a spec file (or the `spec` of a previous JSON result).
    Run {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Model file (discrete-state or conjugate JSON).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Safe payoff s.
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    /// Number of players N.
    #[arg(long = "players", short = 'n')]
    n_players: Option<usize>,
    /// Background signal rate k₀.
    #[arg(long, allow_hyphen_values = true)]
    k0: Option<f64>,
    /// Grid resolution G (step 1/G).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Strategy profile: `eq`, `const:K`, `offset:D`, `threshold:C`,
    /// `linear:A:B`, or one entry per player joined by `/`.
    #[arg(long)]
    profile: Option<String>,
    /// Belief (π₁,…,π_L) as comma-separated values; repeatable.
    #[arg(long = "belief", value_parser = parse_belief)]
    beliefs: Vec<Vec<f64>>,
    /// `prior`, `stratified` or `state:L`.
    #[arg(long, value_parser = parse_conditioning)]
    conditioning: Option<Conditioning>,
    /// Also evaluate the deviation family.
    #[arg(long)]
    deviations: bool,
    /// Output file (json, single csv) or directory (csv tables).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

fn parse_belief(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect()
}

fn parse_conditioning(text: &str) -> Result<Conditioning, String> {
    match text {
        "prior" => Ok(Conditioning::PriorMixture),
        "stratified" => Ok(Conditioning::Stratified),
        _ => match text.strip_prefix("state:") {
            Some(l) => l.parse().map(Conditioning::FixedState).map_err(|e| format!("{e}")),
            None => Err(format!("unknown conditioning `{text}`")),
        },
    }
}

fn parse_format(text: &str) -> Result<OutputFormat, String> {
    match text {
        "json" => Ok(OutputFormat::Json),
        "csv" => Ok(OutputFormat::Csv),
        _ => Err(format!("unknown format `{text}` (json | csv)")),
    }
}

fn infer_format(out: Option<&PathBuf>) -> OutputFormat {
    match out {
        Some(p) if is_csv_path(p) => OutputFormat::Csv,
        Some(p) if p.extension().is_none() => OutputFormat::Csv,
        _ => OutputFormat::Json,
    }
}

fn spec_of(command: Command, c: Common) -> ExperimentSpec {
    let format = c.format.unwrap_or_else(|| infer_format(c.out.as_ref()));
    ExperimentSpec {
        model: c.model,
        overrides: Overrides {
            s: c.s,
            n_players: c.n_players,
            k0: c.k0,
            grid: c.grid,
            paths: c.paths,
            dt: c.dt,
            horizon: c.horizon,
            seed: c.seed,
        },
        profile: c.profile,
        beliefs: c.beliefs,
        conditioning: c.conditioning,
        deviations: c.deviations,
        output: c.out,
        format,
        ..ExperimentSpec::new(command)
    }
}

fn load_spec(path: &PathBuf, out: Option<PathBuf>) -> Result<ExperimentSpec, Error> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let inner = match value.get("spec") {
        Some(s) => s.to_string(),
        None => text,
    };
    let mut spec = ExperimentSpec::from_json(&inner)?;
    if out.is_some() {
        spec.output = out;
    }
    Ok(spec)
}

fn execute(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Invalid {
                field: "threads".into(),
                reason: "must be >= 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    }
    let spec = match cli.command {
        Sub::Equilibrium(c) => spec_of(Command::Equilibrium, c),
        Sub::Simulate(c) => spec_of(Command::Simulate, c),
        Sub::Payoff(c) => spec_of(Command::Payoff, c),
        Sub::HjbCheck(c) => spec_of(Command::HjbCheck, c),
        Sub::Figure1(c) => spec_of(Command::Figure1, c),
        Sub::Figure2(c) => spec_of(Command::Figure2, c),
        Sub::Figure3(c) => spec_of(Command::Figure3, c),
        Sub::Figure4(c) => spec_of(Command::Figure4, c),
        Sub::Figure5(c) => spec_of(Command::Figure5, c),
        Sub::Diagnostics(c) => spec_of(Command::Diagnostics, c),
        Sub::Run { spec, out } => load_spec(&spec, out)?,
    };
    let output = run(&spec)?;
    if let Some(text) = persist(&output, spec.output.as_deref(), spec.format)? {
        let mut stdout = std::io::stdout().lock();
        match writeln!(stdout, "{text}") {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
