use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

mod commands;
mod config;
mod output;

use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] omega_core::Error),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(e) if e.is_usage() => 1,
            CliError::Core(e) if e.is_refusal() => 2,
            CliError::Core(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Eval,
    Admissibility,
    Integrate,
    Mass,
    Norm,
    Hsnorm,
    Spectrum,
    Gap,
    Flow,
    Ricci,
    Partition,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

/// Numerics workbench for the scale-dependent suppression function Omega(k, Lambda).
///
/// Exit status: 0 success, 1 usage or config error, 2 refused as divergent or
/// ill-defined, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "omega", version)]
struct Cli {
    command: Command,
    /// TOML experiment config; every key has a default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Seed for the randomized spot checks in `report`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = ExperimentConfig::load(cli.config.as_deref())?;
    let out = commands::dispatch(cli.command, &config, cli.seed)?;
    let json_only = cli.command == Command::Report;
    let text = match (cli.format, json_only) {
        (Format::Json, _) | (_, true) => out.to_json()?,
        (Format::Csv, _) => out.to_csv()?,
        (Format::Table, _) => out.to_table(),
    };
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(CliError::Io(e.to_string())),
        _ => {}
    }
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let write = |ext: &str, body: String| {
            let path = dir.join(format!("{}.{ext}", out.command));
            std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        };
        write("json", out.to_json()?)?;
        if !json_only {
            write("csv", out.to_csv()?)?;
        }
    }
    Ok(())
}
