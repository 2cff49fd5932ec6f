mod cache;
mod commands;
mod config;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commgrowth::latticeenum::{Method, Pruning};
use tracing_subscriber::EnvFilter;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Missing(String),
    #[error("cache corrupted: {0}")]
    Corrupt(String),
    #[error("{0}")]
    Io(String),
    #[error("resource cap hit: {0}")]
    Cap(String),
    #[error("verification failed: {0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Invalid(_) | CliError::Missing(_) | CliError::Corrupt(_) | CliError::Io(_) => 2,
            CliError::Cap(_) => 3,
        }
    }
}

impl From<commgrowth::Error> for CliError {
    fn from(e: commgrowth::Error) -> Self {
        use commgrowth::Error as E;
        match e {
            E::CapExceeded(c) => CliError::Cap(c.to_string()),
            E::MissingLocalData(m) => CliError::Missing(format!("missing local data: {m}")),
            e @ (E::NotPrime(_) | E::Catalog(_) | E::Parse(_) | E::DimensionMismatch { .. } | E::NonPLocal { .. }) => {
                CliError::Invalid(e.to_string())
            }
            e => CliError::Failed(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "commgrowth", version, about = "Count arithmetic lattices by commensurability index in unipotent groups")]
pub struct Cli {
    /// Print the schema versions of every JSON document and exit.
    #[arg(long)]
    pub schema: bool,
    /// TOML configuration file.
    #[arg(long, env = config::CONFIG_ENV, global = true)]
    pub config: Option<PathBuf>,
    /// Coefficient cache (JSON lines).
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Neither read nor write the cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Directory of group documents replacing the built-in catalog.
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// Log filter for stderr (overridden by RUST_LOG).
    #[arg(long, default_value = "warn", global = true)]
    pub log: String,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Args, Debug, Clone)]
pub struct CapArgs {
    #[arg(long)]
    pub max_envelope_index: Option<i64>,
    #[arg(long)]
    pub max_oracle_group_size: Option<u64>,
    #[arg(long)]
    pub max_frontier: Option<usize>,
    /// Seconds; 0 disables.
    #[arg(long)]
    pub timeout: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Inspect the group catalog.
    Groups {
        #[command(subcommand)]
        action: GroupsAction,
    },
    /// Coefficients c_{p^k} for k = 0..=max_k as a JSON table.
    Count {
        #[arg(long)]
        group: String,
        #[arg(long)]
        prime: u64,
        #[arg(long)]
        max_k: usize,
        #[arg(long, default_value = "search")]
        method: Method,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "tight")]
        pruning: Pruning,
        #[command(flatten)]
        caps: CapArgs,
    },
    /// Local or global zeta coefficients, optionally with a rational fit.
    Zeta {
        #[arg(long)]
        group: String,
        #[arg(long, value_enum, default_value = "local")]
        scope: Scope,
        #[arg(long, required_if_eq("scope", "local"))]
        prime: Option<u64>,
        #[arg(long, default_value_t = 4)]
        max_k: usize,
        #[arg(long, required_if_eq("scope", "global"))]
        max_n: Option<u64>,
        #[arg(long, default_value = "search")]
        method: Method,
        /// Fit a linear recurrence and report the rational function in t = p^-s.
        #[arg(long)]
        fit: bool,
        #[arg(long, default_value_t = 2)]
        max_len: usize,
        /// Write CSV instead of JSON.
        #[arg(long)]
        csv: bool,
        /// Use only cached local data; gaps are reported, not computed.
        #[arg(long)]
        cached_only: bool,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        caps: CapArgs,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: verify::Suite,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Stream the lattices with c(Γ, Δ) ≤ p^max_k as JSON lines.
    Lattices {
        #[arg(long)]
        group: String,
        #[arg(long)]
        prime: u64,
        #[arg(long)]
        max_k: usize,
        #[arg(long, value_enum, default_value = "records")]
        emit: Emit,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        caps: CapArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum GroupsAction {
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Local,
    Global,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emit {
    /// Full records with both bases.
    Records,
    /// One canonical key per line.
    Keys,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let filter = EnvFilter::try_from_default_env().or_else(|_| EnvFilter::try_new(&cli.log)).unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
