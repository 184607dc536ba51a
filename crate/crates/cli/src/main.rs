use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

mod commands;

use commands::{CliError, Report, SCHEMA_VERSION};

/// Analyse quantum and classical instruments stored as JSON model files.
///
/// Exit status: 0 for a positive verdict, 1 for a negative verdict,
/// 2 for malformed input or inputs an analysis does not apply to.
#[derive(Debug, Parser)]
#[command(name = "qcompl", version, about, long_about)]
struct Cli {
    /// Global tolerance: sets the matrix-equality threshold to F and the
    /// probability threshold to 10*F.
    #[arg(long, global = true, value_name = "F")]
    tol: Option<f64>,

    /// Emit a JSON report on standard output.
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads for harness trials (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Theory {
    Quantum,
    Classical,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an instrument, state or witness file for validity.
    Validate { file: PathBuf },
    /// Decide whether an instrument is an elementary property.
    Classify { file: PathBuf },
    /// Verifier support of one outcome, and optionally whether a state verifies it.
    Verifiers {
        file: PathBuf,
        #[arg(long)]
        outcome: String,
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Complementarity of two elementary properties, with degree tables.
    Comp { p: PathBuf, q: PathBuf },
    /// Weak compatibility of two elementary properties.
    Compat { p: PathBuf, q: PathBuf },
    /// Verify that W witnesses that T does not exclude G.
    Witness { t: PathBuf, g: PathBuf, w: PathBuf },
    /// Randomised verifier-inclusion check.
    Harness {
        #[arg(long, value_enum, default_value = "quantum")]
        theory: Theory,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Classify { .. } => "classify",
            Command::Verifiers { .. } => "verifiers",
            Command::Comp { .. } => "comp",
            Command::Compat { .. } => "compat",
            Command::Witness { .. } => "witness",
            Command::Harness { .. } => "harness",
        }
    }
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let tol = match cli.tol {
        Some(f) => qcompl_core::Tolerances::from_global(f)?,
        None => qcompl_core::Tolerances::default(),
    };
    match &cli.command {
        Command::Validate { file } => commands::validate(file, &tol),
        Command::Classify { file } => commands::classify(file, &tol),
        Command::Verifiers { file, outcome, state } => {
            commands::verifiers(file, outcome, state.as_deref(), &tol)
        }
        Command::Comp { p, q } => commands::comp(p, q, &tol),
        Command::Compat { p, q } => commands::compat(p, q, &tol),
        Command::Witness { t, g, w } => commands::witness(t, g, w, &tol),
        Command::Harness {
            theory,
            dim,
            trials,
            seed,
        } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cli.jobs.unwrap_or(0))
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            pool.install(|| commands::harness(*theory, *dim, *trials, *seed, &tol))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                let mut body = json!({"schema_version": SCHEMA_VERSION, "command": command});
                if let (Some(out), serde_json::Value::Object(fields)) = (body.as_object_mut(), report.json) {
                    out.extend(fields);
                }
                println!("{}", serde_json::to_string_pretty(&body).expect("report serialises"));
            } else {
                print!("{}", report.text);
            }
            ExitCode::from(report.code)
        }
        Err(err) => {
            if cli.json {
                let body = json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": command,
                    "error": {"kind": err.kind(), "message": err.to_string()},
                });
                println!("{}", serde_json::to_string_pretty(&body).expect("report serialises"));
            }
            eprintln!("qcompl {command}: {err}");
            ExitCode::from(2)
        }
    }
}
