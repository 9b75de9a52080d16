//! scriptwatch: crawl pages for cross-origin scripts, poll and hash them
//! over time, audit subresource-integrity coverage, and predict which
//! scripts will change.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::RunConfig;

/// Errors carry the process exit code: 1 usage, 2 data, 3 network-fatal.
#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Data(String),
    Network(String),
}

impl AppError {
    fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Data(_) => 2,
            AppError::Network(_) => 3,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Usage(m) | AppError::Data(m) | AppError::Network(m) => f.write_str(m),
        }
    }
}

impl From<scriptwatch_core::store::StoreError> for AppError {
    fn from(e: scriptwatch_core::store::StoreError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<scriptwatch_core::report::ReportError> for AppError {
    fn from(e: scriptwatch_core::report::ReportError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<scriptwatch_core::tree::TreeError> for AppError {
    fn from(e: scriptwatch_core::tree::TreeError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<scriptwatch_core::features::FeatureError> for AppError {
    fn from(e: scriptwatch_core::features::FeatureError) -> Self {
        AppError::Data(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "scriptwatch",
    version,
    about = "Monitor the temporal integrity of cross-origin JavaScript",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Workspace directory holding all pipeline files.
    #[arg(short, long, global = true)]
    workspace: Option<PathBuf>,

    /// TOML config file; flags override file values.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Seed for all sampling and cross-validation randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Per-request timeout in seconds.
    #[arg(long, global = true)]
    timeout: Option<u64>,

    /// Concurrent fetch workers.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Top-domain dummy count (and ranking depth).
    #[arg(long, global = true)]
    top_k: Option<usize>,

    /// Ad-block filter list snapshot.
    #[arg(long, global = true)]
    filter_list: Option<PathBuf>,

    /// Maximum decision-tree depth.
    #[arg(long, global = true)]
    max_depth: Option<usize>,

    /// Cross-validation folds.
    #[arg(long, global = true)]
    folds: Option<usize>,

    /// Under-sampling repetitions.
    #[arg(long, global = true)]
    repetitions: Option<usize>,

    /// Immediate retries on transient fetch errors.
    #[arg(long, global = true)]
    retries: Option<u32>,

    /// Redirect-following cap.
    #[arg(long, global = true)]
    max_redirects: Option<u32>,

    /// Concurrent request cap per host.
    #[arg(long, global = true)]
    per_host_cap: Option<usize>,

    /// Inter-request delay per host, milliseconds.
    #[arg(long, global = true)]
    host_delay_ms: Option<u64>,

    /// User-Agent header.
    #[arg(long, global = true)]
    user_agent: Option<String>,

    /// Custom public-suffix snapshot (the bundled one is the default).
    #[arg(long, global = true)]
    psl_file: Option<PathBuf>,

    /// Resolve registrable domains with the last-two-labels heuristic.
    #[arg(long, global = true)]
    no_psl: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Crawl seed domains and build the polling pool.
    Crawl {
        /// Seed list, one domain per line.
        #[arg(long)]
        seeds: Option<PathBuf>,
    },
    /// Execute the next polling round over the pool.
    Poll,
    /// Reduce the poll log to summaries, features, and the report directory.
    Analyze,
    /// Cross-validate the change classifier on the feature matrix.
    Train,
    /// Regenerate the report directory from existing outputs.
    Report,
    /// Audit one page's cross-origin scripts for integrity protection.
    Audit {
        /// Page URL to audit.
        url: String,
    },
}

fn merge(cli: &Cli) -> Result<RunConfig, AppError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    macro_rules! take {
        ($($field:ident),*) => {
            $(if let Some(value) = cli.$field.clone() { config.$field = value; })*
        };
    }
    take!(
        seed, timeout, workers, top_k, max_depth, folds, repetitions, retries, max_redirects,
        per_host_cap, host_delay_ms, user_agent
    );
    if let Some(workspace) = &cli.workspace {
        config.workspace = workspace.clone();
    }
    if let Some(filter_list) = &cli.filter_list {
        config.filter_list = Some(filter_list.clone());
    }
    if let Some(psl_file) = &cli.psl_file {
        config.psl_file = Some(psl_file.clone());
    }
    if cli.no_psl {
        config.no_psl = true;
    }
    config.validate()?;
    Ok(config)
}

fn run() -> Result<(), AppError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(AppError::Usage(e.to_string())),
    };
    let config = merge(&cli)?;
    match &cli.command {
        Command::Crawl { seeds } => commands::crawl::run(&config, seeds.as_deref()),
        Command::Poll => commands::poll::run(&config),
        Command::Analyze => commands::analyze::run(&config),
        Command::Train => commands::train::run(&config),
        Command::Report => commands::report::run(&config),
        Command::Audit { url } => commands::audit::run(&config, url),
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
