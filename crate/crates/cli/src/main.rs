//! `qkan`: build, check, evaluate and train CHEB-QKAN networks from a JSON config.

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qkan::QkanError;

use config::Config;

#[derive(Parser)]
#[command(name = "qkan", version, about = "Simulate CHEB-QKAN block-encodings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Leave the timestamp out of the report.
    #[arg(long)]
    no_timestamp: bool,
    /// Largest operator width the simulator may build.
    #[arg(long, default_value_t = 22)]
    max_qubits: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check encoders, Chebyshev QSVT, combinator and layer error bounds.
    Verify(Common),
    /// Evaluate the network on the config input and compare with the classical oracle.
    Eval(Common),
    /// Train the weights on the configured dataset.
    Train {
        #[command(flatten)]
        common: Common,
        /// Write `iteration,loss` rows here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Count queries and ancillas and reconcile them with the cost model.
    Resources(Common),
    /// Prepare the normalized output state by post-selection.
    PrepareState(Common),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Qkan(QkanError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Qkan(QkanError::Contract(_) | QkanError::Domain(_)) => 2,
            CliError::Qkan(QkanError::AncillaBudget { .. } | QkanError::ResourceLimit { .. }) => 3,
            CliError::Qkan(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Qkan(e) => write!(f, "{e}"),
        }
    }
}

fn read_config(path: &Path) -> Result<Config, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Config::parse(&text)
}

fn write_trace(path: &Path, initial: f64, trace: &[f64]) -> Result<(), CliError> {
    let mut out = String::from("iteration,loss\n");
    out.push_str(&format!("0,{initial:e}\n"));
    for (k, l) in trace.iter().enumerate() {
        out.push_str(&format!("{},{l:e}\n", k + 1));
    }
    fs::write(path, out).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn run(command: &Command) -> Result<(Value, bool), CliError> {
    let (name, common) = match command {
        Command::Verify(c) => ("verify", c),
        Command::Eval(c) => ("eval", c),
        Command::Train { common, .. } => ("train", common),
        Command::Resources(c) => ("resources", c),
        Command::PrepareState(c) => ("prepare-state", c),
    };
    qkan::operator::set_max_qubits(common.max_qubits);
    let resolved = read_config(&common.config)?.resolve(common.seed)?;
    let outcome = match command {
        Command::Verify(_) => commands::verify_cmd(&resolved)?,
        Command::Eval(_) => commands::eval_cmd(&resolved)?,
        Command::Resources(_) => commands::resources_cmd(&resolved)?,
        Command::PrepareState(_) => commands::prepare_state_cmd(&resolved)?,
        Command::Train { trace, .. } => {
            let (outcome, trained) = commands::train_cmd(&resolved)?;
            if let Some(path) = trace {
                write_trace(path, trained.initial_loss, &trained.trace)?;
            }
            outcome
        }
    };
    let mut report = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "passed": outcome.passed,
        "config": resolved.config,
        "result": outcome.result,
    });
    if !common.no_timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        report["timestamp"] = json!(secs);
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &common.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    Ok((report, outcome.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((_, true)) => ExitCode::SUCCESS,
        Ok((_, false)) => {
            eprintln!("qkan: check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("qkan: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
