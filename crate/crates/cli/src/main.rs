//! `lossless`: batch runner for learning-dynamics scenarios.
//!
//! Exit status is 0 when every requested check passes, 1 when a check fails
//! and 2 for unreadable, malformed or inconsistent input.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod presets;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lossless::IntegratorConfig;

use crate::config::{validate, Document};
use crate::run::{run_all, RunSettings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}:{line}:{column}: {message}", path.display())]
    Config {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scenario `{scenario}`: {source}")]
    Run {
        scenario: String,
        source: lossless::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn from_json(path: &Path, e: serde_json::Error) -> Self {
        // serde_json appends " at line L column C"; the prefix carries it instead
        let msg = e.to_string();
        let message = match msg.rfind(" at line ") {
            Some(i) => msg[..i].to_string(),
            None => msg,
        };
        CliError::Config {
            path: path.to_path_buf(),
            line: e.line().max(1),
            column: e.column().max(1),
            message,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "lossless",
    version,
    about = "Simulate and certify learning dynamics in games"
)]
struct Cli {
    /// Seed for randomized checks that do not fix their own.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Multiplies every check threshold.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenarios in a config document (or re-run a manifest).
    Run {
        config: PathBuf,
        /// Root directory; each scenario writes into `<out>/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in figure preset.
    Preset {
        name: String,
        #[arg(long, default_value_t = presets::DEFAULT_DT)]
        dt: f64,
        #[arg(long, default_value_t = presets::DEFAULT_HORIZON)]
        horizon: f64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Print the preset catalog.
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    if !(cli.tolerance_scale > 0.0) || !cli.tolerance_scale.is_finite() {
        return Err(CliError::Usage(format!(
            "--tolerance-scale must be positive, got {}",
            cli.tolerance_scale
        )));
    }
    let (doc, out) = match cli.command {
        Command::ListPresets => {
            for p in presets::CATALOG {
                println!("{:<11} [{}] {}", p.name, p.figure, p.description);
            }
            return Ok(true);
        }
        Command::Run { config, out } => (Document::load(&config)?, out),
        Command::Preset {
            name,
            dt,
            horizon,
            out,
        } => {
            let preset = presets::find(&name).ok_or_else(|| {
                let known: Vec<_> = presets::CATALOG.iter().map(|p| p.name).collect();
                CliError::Usage(format!(
                    "unknown preset `{name}` (known: {})",
                    known.join(", ")
                ))
            })?;
            let integrator = IntegratorConfig::new(dt, horizon);
            integrator
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            (
                Document::in_memory(preset.name, preset.scenarios(&integrator)),
                Some(out),
            )
        }
    };
    let scenarios = validate(&doc, cli.tolerance_scale, cli.seed)?;
    let settings = RunSettings {
        out,
        seed: cli.seed,
        tolerance_scale: cli.tolerance_scale,
    };
    let mut all_passed = true;
    let mut first_error = None;
    for outcome in run_all(&scenarios, &settings) {
        match outcome {
            Ok(o) => {
                let verdict = if o.passed() { "PASS" } else { "FAIL" };
                println!("{verdict} {} -> {}", o.name, o.dir.display());
                for r in &o.reports {
                    println!(
                        "  {:<4} {:<10} {:.3e} (tolerance {:.1e})",
                        if r.passed() { "ok" } else { "FAIL" },
                        r.check,
                        r.max_residual,
                        r.tolerance
                    );
                    if !r.passed() {
                        let json = serde_json::to_string_pretty(r).expect("report serializes");
                        eprintln!("{json}");
                    }
                }
                all_passed &= o.passed();
            }
            Err(e) => {
                eprintln!("error: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(all_passed),
    }
}
