//! Batch runner for the `kantorovich` crate.
//!
//! Every subcommand reads one JSON config (`--config`), writes CSV or JSON to
//! stdout or `--out`, and exits with 0 on success, 2 on a usage or config
//! error and 3 when a numerical invariant fails. Diagnostics and summary
//! lines go to stderr.

pub mod commands;
pub mod config;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::Config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config field {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("config is not valid JSON (line {line}, column {column}): {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] kantorovich::Error),
    /// A suite or bound check failed; output is still written.
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Violation(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "kantorovich", version, about = "Discrete optimal transport experiments")]
pub struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for random measures and suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for sweeps and suites.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal plan, value and dual potentials for `mu`, `nu`, `cost`.
    Solve,
    /// d_K, its dual, d_KR and W_p between `mu` and `nu`.
    Metric,
    /// Glue couplings `c12` and `c23` along their shared marginal.
    Glue,
    /// Carry plan `sigma` to new marginals `mu2` (and `nu2`).
    Carry,
    /// Hausdorff distance between two transportation polytopes.
    Hausdorff,
    /// Solve a parametric family over its grid.
    Sweep,
    /// Path of eps-optimal plans over a parametric family.
    Select,
    /// Deviation masses of monotone maps in the reweighted-grid scenario.
    Monge,
    /// Sweep a built-in family with a uniqueness probe per grid point.
    Gallery {
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run seeded invariant suites.
    Verify {
        /// Suite name or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Instances per suite (default: each suite's standard size).
        #[arg(long)]
        instances: Option<usize>,
    },
}

/// Result of a subcommand before formatting.
pub struct Output {
    pub table: table::Table,
    pub json: serde_json::Value,
    /// Lines for stderr.
    pub notes: Vec<String>,
    /// Set when a check failed; the output is written and the exit code is 3.
    pub violation: Option<String>,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.jobs == 0 {
        return Err(CliError::Config { path: "--jobs".into(), msg: "must be at least 1".into() });
    }
    let cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Config::parse(&text, cli.seed)?
        }
        None => Config::empty(cli.seed),
    };
    let out = commands::dispatch(&cli.command, &cfg, cli.jobs)?;
    let body = match cli.format {
        Format::Csv => out.table.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.json).expect("json values serialize");
            s.push('\n');
            s
        }
    };
    match &cli.out {
        Some(p) => std::fs::write(p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => print!("{body}"),
    }
    for n in &out.notes {
        eprintln!("{n}");
    }
    match out.violation {
        Some(v) => Err(CliError::Violation(v)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kantorovich::Error;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Violation("x".into()).exit_code(), 3);
        assert_eq!(CliError::Core(Error::IterationLimit { pivots: 10 }).exit_code(), 3);
        assert_eq!(CliError::Core(Error::InvalidInput("x".into())).exit_code(), 2);
        assert_eq!(CliError::Config { path: "a".into(), msg: "b".into() }.exit_code(), 2);
        assert_eq!(CliError::Io("x".into()).exit_code(), 2);
    }
}
