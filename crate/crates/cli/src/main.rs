use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::ConfigFile;

/// Environment variable naming the default output directory for `repro`.
pub const OUT_DIR_ENV: &str = "CARRYFRAC_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations (exit 2).
    Usage(String),
    /// Reading or writing files failed (exit 3).
    Io(String),
    /// A verification suite reported failures (exit 1).
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Library errors reaching the CLI come from flag values it could not
/// rule out up front (grid caps, unreachable targets).
pub fn usage(flag: &str) -> impl Fn(carryfrac::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("--{flag}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "carryfrac", version, about = "Carry and extreme value transformation fractals")]
pub struct Cli {
    /// key=value defaults; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the value table of a transform as CSV, one row per a
    Table(commands::TableArgs),
    /// Render an indicator grid (with --target) or a value table as netpbm
    Render(commands::RenderArgs),
    /// Closed-form similarity dimensions per base
    Dim(commands::DimArgs),
    /// Run invariant suites, one JSON line per check
    Verify(commands::VerifyArgs),
    /// Overlay consecutive-base CVT generators and box-count the overflow
    Increment(commands::IncrementArgs),
    /// Regenerate every table, figure and report into a directory tree
    Repro(commands::ReproArgs),
}

/// Opens `path` for writing, or stdout for `-` / no path.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            }
            let file =
                File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Table(args) => commands::table(args, &cfg),
        Command::Render(args) => commands::render(args, &cfg),
        Command::Dim(args) => commands::dim(args, &cfg),
        Command::Verify(args) => commands::verify(args, &cfg),
        Command::Increment(args) => commands::increment(args, &cfg),
        Command::Repro(args) => commands::repro(args, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("error: invalid arguments");
            eprintln!("carryfrac: {line}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("carryfrac: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
