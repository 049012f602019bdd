//! `hkgc`: solve, metric, verify and twistor drivers.
//!
//! Exit codes: 0 success, 1 input error, 2 solver failure, 3 failed check.
//! Errors are reported as one JSON object on standard error.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use hkgc::error::Error;
use hkgc::liecore::GroupSpec;
use hkgc::verify::Suite;

use config::{Format, RunConfig, Settings};

#[derive(Debug, Parser)]
#[command(name = "hkgc", version, about = "Hyperkähler structure on T*G^c from Nahm's equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Args)]
struct Opts {
    /// u1, su2, un:<n> or sun:<n>.
    #[arg(long, global = true)]
    group: Option<String>,
    /// Number of grid intervals on [0, 1].
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Real-equation residual tolerance of the gauge-fixing solver.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also solve at twice the grid and combine by Richardson extrapolation.
    #[arg(long, global = true)]
    extrapolate: bool,
    /// Write the artifact here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    /// `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON moduli point `{"U": [[[re, im], ...], ...], "eta": ...}`.
    #[arg(long, global = true)]
    point: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gauge-fixed Nahm solution at a moduli point.
    Solve,
    /// Metric, Kähler forms and complex structures at a moduli point.
    Metric,
    /// Run a named property suite over seeded random points.
    Verify {
        /// quaternion, symmetry, twistor, flat-abelian, omega-c or all.
        suite: String,
        /// Random points besides the origin.
        #[arg(long)]
        points: Option<usize>,
        /// json or csv.
        #[arg(long)]
        format: Option<String>,
    },
    /// Transition function against re-extraction over the overlap ring.
    Twistor,
}

enum Failure {
    Input(Error),
    Solver(Error),
    Checks(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. }
            | Error::SingularSystem { .. }
            | Error::IntegrationFailure(_)
            | Error::DegenerateBasis(_) => Failure::Solver(e),
            _ => Failure::Input(e),
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::GridTooSmall(_) => "grid_too_small",
        Error::RoleViolation { .. } => "role_violation",
        Error::BranchCut { .. } => "branch_cut",
        Error::Singular => "singular",
        Error::SingularSystem { .. } => "singular_system",
        Error::NonConvergence { .. } => "non_convergence",
        Error::IntegrationFailure(_) => "integration_failure",
        Error::DegenerateBasis(_) => "degenerate_basis",
        Error::NotOnLocus(_) => "not_on_locus",
        Error::NotRotation(_) => "not_rotation",
        Error::ZetaZero => "zeta_zero",
        Error::ZetaPrimeZero => "zeta_prime_zero",
        Error::Invalid(_) => "invalid_input",
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Checks(_) => 3,
        }
    }

    fn report(&self) -> serde_json::Value {
        let code = self.exit_code();
        match self {
            Failure::Input(e) | Failure::Solver(e) => {
                json!({ "error": error_kind(e), "message": e.to_string(), "exit_code": code })
            }
            Failure::Checks(failed) => json!({ "error": "verification_failed", "failed": failed, "exit_code": code }),
        }
    }
}

fn settings(cli: &Cli) -> Result<Settings, Error> {
    let o = &cli.opts;
    let (points, format) = match &cli.command {
        Command::Verify { points, format, .. } => (*points, format.as_deref().map(str::parse::<Format>).transpose()?),
        _ => (None, None),
    };
    let flags = Settings {
        group: o.group.as_deref().map(str::parse::<GroupSpec>).transpose()?,
        grid: o.grid,
        tol: o.tol,
        seed: o.seed,
        extrapolate: o.extrapolate.then_some(true),
        out: o.out.clone(),
        verbose: o.verbose.then_some(true),
        point: o.point.clone(),
        points,
        format,
    };
    let file = match &o.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    Ok(file.overridden_by(flags))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize to JSON");
    s.push('\n');
    s
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match &cfg.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Input(Error::Invalid(format!("cannot write {}: {e}", path.display())))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn not_converged() -> Failure {
    Failure::Solver(Error::Invalid("residual certificate exceeds the requested tolerance".into()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = RunConfig::from_settings(settings(&cli)?)?;
    match &cli.command {
        Command::Solve => {
            let (artifact, ok) = commands::solve(&cfg)?;
            emit(&cfg, &to_json(&artifact))?;
            ok.then_some(()).ok_or_else(not_converged)
        }
        Command::Metric => {
            let (artifact, ok) = commands::metric(&cfg)?;
            emit(&cfg, &to_json(&artifact))?;
            ok.then_some(()).ok_or_else(not_converged)
        }
        Command::Verify { suite, .. } => {
            let suite: Suite = suite.parse()?;
            let artifact = commands::verify(&cfg, suite)?;
            let text = match cfg.format {
                Format::Json => to_json(&artifact),
                Format::Csv => commands::checks_csv(&artifact.checks)?,
            };
            emit(&cfg, &text)?;
            let failed: Vec<String> =
                artifact.checks.iter().filter(|c| !c.passed).map(|c| format!("{}:{}", c.suite, c.name)).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Checks(failed))
            }
        }
        Command::Twistor => {
            let (reports, ok) = commands::twistor(&cfg)?;
            emit(&cfg, &to_json(&reports))?;
            if ok {
                Ok(())
            } else {
                let failed = reports
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.deviation() > hkgc::verify::TWISTOR_TOL)
                    .map(|(k, _)| format!("twistor:zeta{k}"))
                    .collect();
                Err(Failure::Checks(failed))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure::Input(Error::Invalid(e.kind().to_string()));
            eprintln!("{}", e.render());
            eprintln!("{}", f.report());
            return ExitCode::from(f.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.report());
            ExitCode::from(f.exit_code())
        }
    }
}
