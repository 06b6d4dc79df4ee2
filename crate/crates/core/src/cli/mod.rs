//! Batch front-end: experiment configs in, CSV and text artifacts out.

mod config;
mod demo;
mod run;

pub use config::{validate, Diagnostic, ExperimentConfig, ExperimentKind, Job, Plan};
pub use demo::{demo_configs, run_demo, DemoPart, DEMOS};
pub use run::{config_hash, execute, header, strip_header, write_artifacts, Artifact, RunOutcome};

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};
use std::{fs, io::Write};

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "invlab", version, about = "Invariant-measure and orbit-statistics experiments for 1-D maps")]
pub struct Cli {
    /// Overrides the seed given in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving the output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Adds a creation time to output headers (bodies are unaffected).
    #[arg(long, global = true)]
    pub timestamps: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs an experiment config.
    Run { config: PathBuf },
    /// Checks a config without running it.
    Validate { config: PathBuf },
    /// Runs a built-in demo; `list` prints the names.
    Demo { name: String },
}

fn now() -> Option<u64> {
    SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
}

fn read(path: &Path, err: &mut dyn Write) -> Option<String> {
    match fs::read_to_string(path) {
        Ok(t) => Some(t),
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            None
        }
    }
}

fn emit(cli: &Cli, kind: &str, hash: &str, seed: u64, outcome: &RunOutcome, out: &mut dyn Write) -> crate::Result<()> {
    let head = header(kind, hash, seed, cli.timestamps.then(now).flatten());
    let paths = write_artifacts(&cli.out_dir, &head, &outcome.artifacts)?;
    write!(out, "{}", outcome.summary)?;
    if let Some(s) = outcome.success {
        writeln!(out, "success = {s}")?;
    }
    for p in paths {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

/// Runs a parsed command line, writing reports to `out` and problems to `err`.
pub fn run_cli(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode {
    if let Some(n) = cli.threads {
        if n == 0 {
            let _ = writeln!(err, "error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // a second call in the same process keeps the first pool, which is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Validate { config } => {
            let Some(text) = read(config, err) else { return ExitCode::FAILURE };
            let diags = validate(&text);
            if diags.is_empty() {
                let _ = writeln!(out, "{}: ok", config.display());
                return ExitCode::SUCCESS;
            }
            for d in diags {
                let _ = writeln!(err, "{}: {d}", config.display());
            }
            ExitCode::FAILURE
        }
        Command::Run { config } => {
            let Some(text) = read(config, err) else { return ExitCode::FAILURE };
            let plan = match ExperimentConfig::plan(&text, cli.seed) {
                Ok(p) => p,
                Err(diags) => {
                    for d in diags {
                        let _ = writeln!(err, "{}: {d}", config.display());
                    }
                    return ExitCode::FAILURE;
                }
            };
            let result = execute(&plan).and_then(|o| emit(cli, plan.kind.name(), &config_hash(&text), plan.seed, &o, out));
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Demo { name } if name == "list" => {
            for d in DEMOS {
                let _ = writeln!(out, "{d}");
            }
            ExitCode::SUCCESS
        }
        Command::Demo { name } => {
            let result = run_demo(name, cli.seed.unwrap_or(0)).and_then(|parts| {
                parts
                    .iter()
                    .try_for_each(|p| emit(cli, &p.experiment, &p.hash, p.seed, &p.outcome, out))
            });
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}

/// Entry point of the `invlab` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    run_cli(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
