//! Workspace file formats: the pool manifest, the append-only poll log,
//! integrity summaries, and the rejection log. One JSON object per line
//! throughout, so every stage is independently greppable and replayable.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fetch::ErrorClass;
use crate::integrity::IntegritySummary;
use crate::poll::{PollOutcome, PollRecord, PoolEntry, Rejection};
use crate::sri::{Digest, HashAlgorithm};

pub const POOL_FILE: &str = "pool.jsonl";
pub const POLL_LOG_FILE: &str = "poll_log.jsonl";
pub const SUMMARIES_FILE: &str = "summaries.jsonl";
pub const REJECTIONS_FILE: &str = "rejections.jsonl";
pub const LOCK_FILE: &str = ".scriptwatch.lock";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("missing input file `{0}` (run the earlier pipeline stage first)")]
    Missing(PathBuf),
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error("workspace is locked by another command ({0} exists); remove it if no other process is running")]
    Locked(PathBuf),
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    if !path.exists() {
        return Err(StoreError::Missing(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|e| StoreError::Io(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| StoreError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| StoreError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), StoreError> {
    let mut file = std::fs::File::create(path).map_err(|e| StoreError::Io(e.to_string()))?;
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| StoreError::Io(e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| StoreError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn write_pool(path: &Path, pool: &[PoolEntry]) -> Result<(), StoreError> {
    write_jsonl(path, pool)
}

pub fn read_pool(path: &Path) -> Result<Vec<PoolEntry>, StoreError> {
    read_jsonl(path)
}

pub fn write_rejections(path: &Path, rejections: &[Rejection]) -> Result<(), StoreError> {
    write_jsonl(path, rejections)
}

pub fn write_summaries(path: &Path, summaries: &[IntegritySummary]) -> Result<(), StoreError> {
    write_jsonl(path, summaries)
}

pub fn read_summaries(path: &Path) -> Result<Vec<IntegritySummary>, StoreError> {
    read_jsonl(path)
}

/// Wire form of one poll-log line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PollLogLine {
    pub url_id: u32,
    pub t: u32,
    pub timestamp: u64,
    /// `ok` or an error class (`dns`, `timeout`, `http_status(404)`, ...).
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha1_hex: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_url: Option<String>,
}

impl From<&PollRecord> for PollLogLine {
    fn from(record: &PollRecord) -> Self {
        let (status, sha1_hex, length) = match &record.outcome {
            PollOutcome::Ok { digest, length } => {
                ("ok".to_string(), Some(digest.hex()), Some(*length))
            }
            PollOutcome::Bottom(class) => (class.to_string(), None, None),
        };
        PollLogLine {
            url_id: record.url_id,
            t: record.t,
            timestamp: record.timestamp,
            status,
            sha1_hex,
            length,
            final_url: record.final_url.clone(),
        }
    }
}

impl PollLogLine {
    pub fn into_record(self) -> Result<PollRecord, String> {
        let outcome = if self.status == "ok" {
            let hex = self.sha1_hex.ok_or("ok record without sha1_hex")?;
            let digest = Digest::from_hex(HashAlgorithm::Sha1, &hex).map_err(|e| e.to_string())?;
            PollOutcome::Ok {
                digest,
                length: self.length.unwrap_or(0),
            }
        } else {
            PollOutcome::Bottom(self.status.parse::<ErrorClass>()?)
        };
        Ok(PollRecord {
            url_id: self.url_id,
            t: self.t,
            timestamp: self.timestamp,
            outcome,
            final_url: self.final_url,
        })
    }
}

/// Appends one round of records to the poll log, creating it when absent.
pub fn append_poll_records(path: &Path, records: &[PollRecord]) -> Result<(), StoreError> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| StoreError::Io(e.to_string()))?;
    for record in records {
        let line = serde_json::to_string(&PollLogLine::from(record))
            .map_err(|e| StoreError::Io(e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| StoreError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn read_poll_log(path: &Path) -> Result<Vec<PollRecord>, StoreError> {
    let lines: Vec<PollLogLine> = read_jsonl(path)?;
    lines
        .into_iter()
        .enumerate()
        .map(|(i, line)| {
            line.into_record().map_err(|message| StoreError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            })
        })
        .collect()
}

/// The next unrecorded round index: max t in the log plus one, or 0 for a
/// missing or empty log.
pub fn next_round(path: &Path) -> Result<u32, StoreError> {
    if !path.exists() {
        return Ok(0);
    }
    let records = read_poll_log(path)?;
    Ok(records.iter().map(|r| r.t + 1).max().unwrap_or(0))
}

/// Exclusive workspace lock held for the duration of a command. Creating
/// the lock file fails if it already exists; dropping the guard removes it.
pub struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    pub fn acquire(workspace: &Path) -> Result<LockGuard, StoreError> {
        let path = workspace.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut file) => {
                let _ = writeln!(file, "{}", std::process::id());
                Ok(LockGuard { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(StoreError::Locked(path))
            }
            Err(e) => Err(StoreError::Io(e.to_string())),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
