//! Batch front end: parses a run config, runs one command and writes a CSV.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};
use thiserror::Error;

use pqbundle::GeomError;

pub use config::RunConfig;
pub use output::Table;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(name = "pqbundle", version, about = "Curvature of (p,q) metrics on normal bundles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output CSV path (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the sample seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// verify: scale of every tolerance. complex-check: identity tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Shorthand for a `[submanifold]` block naming a builtin preset.
    #[arg(long, global = true)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Induced metric, scalar curvature, normal connection and curvature per sample.
    BaseGeometry,
    /// Scalar and sectional curvatures of the bundle per (p,q) and sample.
    CurvatureTable,
    /// Searches (p,q) with scalar curvature above `scan.target`.
    ScanPq,
    /// Closed forms against the finite-difference oracle.
    Verify,
    /// Almost-Hermitian, LCK and Kähler checks.
    ComplexCheck,
    /// Lists the builtin presets.
    Presets,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BaseGeometry => "base-geometry",
            Command::CurvatureTable => "curvature-table",
            Command::ScanPq => "scan-pq",
            Command::Verify => "verify",
            Command::ComplexCheck => "complex-check",
            Command::Presets => "presets",
        }
    }
}

/// Result of a command: the table and whether everything it checked held.
pub struct Outcome {
    pub table: Table,
    pub ok: bool,
}

/// Merges flags into the config.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.samples.seed = s;
    }
    if let Some(name) = &cli.preset {
        cfg.submanifold = Some(config::SubmanifoldBlock {
            preset: Some(name.clone()),
            ..Default::default()
        });
    }
    if let Some(t) = cli.tol {
        match cli.command {
            Command::Verify => cfg.verify.get_or_insert_with(Default::default).tol_scale = Some(t),
            Command::ComplexCheck => cfg.complex.get_or_insert_with(Default::default).tolerance = t,
            _ => {}
        }
    }
    if let Some(p) = &cli.out {
        cfg.output = Some(p.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Hex SHA-256 of the effective config in canonical TOML form. The output
/// path is left out so the same run written to two places hashes the same.
pub fn config_hash(cfg: &RunConfig) -> Result<String, CliError> {
    let mut c = cfg.clone();
    c.output = None;
    let digest = Sha256::digest(c.to_toml()?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::BaseGeometry => commands::base_geometry(cfg),
        Command::CurvatureTable => commands::curvature_table(cfg),
        Command::ScanPq => commands::scan_pq(cfg),
        Command::Verify => commands::verify(cfg),
        Command::ComplexCheck => commands::complex_check(cfg),
        Command::Presets => commands::presets(),
    }
}

fn run_inner(cli: &Cli) -> Result<i32, CliError> {
    let cfg = effective_config(cli)?;
    let outcome = match cli.jobs {
        Some(0) => return Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| execute(cli.command, &cfg))?,
        None => execute(cli.command, &cfg)?,
    };
    let header = format!("# config_hash={} seed={}", config_hash(&cfg)?, cfg.samples.seed);
    match &cfg.output {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            outcome.table.write(&mut f, &header)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            outcome.table.write(&mut lock, &header)?;
            lock.flush()?;
        }
    }
    Ok(if outcome.ok { 0 } else { 1 })
}

/// Parses `args` and runs; returns the process exit code. Never panics on
/// bad input; an unexpected panic inside a computation also maps to 2.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(|| run_inner(&cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(_) => {
            eprintln!("error: internal failure");
            2
        }
    }
}
