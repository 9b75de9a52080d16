//! Run configuration: defaults, the TOML config file, and flag overrides.
//! Precedence is defaults < config file < command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scriptwatch_core::fetch::FetchConfig;
use scriptwatch_core::tree::CvConfig;

use crate::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed domain list, one per line.
    pub seeds: Option<PathBuf>,
    pub workspace: PathBuf,
    /// Ad-block filter snapshot; no list means BLCK is always 0.
    pub filter_list: Option<PathBuf>,
    /// Custom public-suffix snapshot; the bundled one is used by default.
    pub psl_file: Option<PathBuf>,
    /// Degrade registrable-domain resolution to the last-two-labels
    /// heuristic.
    pub no_psl: bool,
    /// Intended cadence between rounds; scheduling itself is left to cron.
    pub poll_interval_hours: u64,
    pub top_k: usize,
    pub seed: u64,
    pub max_depth: usize,
    pub folds: usize,
    pub repetitions: usize,
    pub timeout: u64,
    pub retries: u32,
    pub max_redirects: u32,
    pub workers: usize,
    pub per_host_cap: usize,
    pub host_delay_ms: u64,
    pub user_agent: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fetch = FetchConfig::default();
        RunConfig {
            seeds: None,
            workspace: PathBuf::from("."),
            filter_list: None,
            psl_file: None,
            no_psl: false,
            poll_interval_hours: 24,
            top_k: 15,
            seed: 1,
            max_depth: 15,
            folds: 10,
            repetitions: 100,
            timeout: fetch.timeout_seconds,
            retries: fetch.retries,
            max_redirects: fetch.max_redirects,
            workers: fetch.workers,
            per_host_cap: fetch.per_host_cap,
            host_delay_ms: fetch.host_delay_ms,
            user_agent: fetch.user_agent,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Usage(format!("config file {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| AppError::Usage(format!("config file {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), AppError> {
        let positives: [(&str, u64); 8] = [
            ("poll-interval-hours", self.poll_interval_hours),
            ("top-k", self.top_k as u64),
            ("max-depth", self.max_depth as u64),
            ("folds", self.folds as u64),
            ("repetitions", self.repetitions as u64),
            ("timeout", self.timeout),
            ("workers", self.workers as u64),
            ("per-host-cap", self.per_host_cap as u64),
        ];
        for (name, value) in positives {
            if value == 0 {
                return Err(AppError::Usage(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn fetch_config(&self) -> FetchConfig {
        FetchConfig {
            timeout_seconds: self.timeout,
            retries: self.retries,
            max_redirects: self.max_redirects,
            workers: self.workers,
            per_host_cap: self.per_host_cap,
            host_delay_ms: self.host_delay_ms,
            user_agent: self.user_agent.clone(),
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            folds: self.folds,
            repetitions: self.repetitions,
            max_depth: self.max_depth,
            min_leaf: 1,
            seed: self.seed,
        }
    }
}
