//! Reduction of per-URL hash series to temporal-integrity quantities.
//!
//! Failed rounds (⊥) are dropped before the remaining digests are collapsed
//! to a set: the weaker integrity definition, where transmission failures
//! never count as violations. The change count for a URL is the number of
//! unique digests minus one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poll::{HashSeries, PollOutcome};
use crate::sri::Digest;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IntegrityError {
    #[error("series for url_id {0} has no successful rounds")]
    EmptySeries(u32),
}

/// Set-based change summary for one polled URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegritySummary {
    pub url_id: u32,
    pub unique_hashes: BTreeSet<Digest>,
    pub change_count: u32,
    pub intact: bool,
    /// Successful (non-⊥) rounds.
    pub observed_rounds: u32,
    /// ⊥ rounds.
    pub failed_rounds: u32,
    /// Auxiliary: transitions between consecutive differing digests in time
    /// order. Not a set-based quantity; excluded from classification.
    pub transition_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeLabel {
    Intact,
    Changed,
}

/// Collapses a hash series to its summary. Errors when every round is ⊥.
pub fn summarize(series: &HashSeries) -> Result<IntegritySummary, IntegrityError> {
    let mut unique_hashes = BTreeSet::new();
    let mut observed = Vec::new();
    let mut failed_rounds = 0u32;
    for record in &series.records {
        match &record.outcome {
            PollOutcome::Ok { digest, .. } => {
                unique_hashes.insert(digest.clone());
                observed.push(digest.clone());
            }
            PollOutcome::Bottom(_) => failed_rounds += 1,
        }
    }
    if observed.is_empty() {
        return Err(IntegrityError::EmptySeries(series.url_id));
    }
    let transition_count = observed.windows(2).filter(|w| w[0] != w[1]).count() as u32;
    Ok(IntegritySummary {
        url_id: series.url_id,
        change_count: (unique_hashes.len() - 1) as u32,
        intact: unique_hashes.len() == 1,
        observed_rounds: observed.len() as u32,
        failed_rounds,
        transition_count,
        unique_hashes,
    })
}

/// Dichotomizes a summary: changed iff at least one change was observed.
pub fn label(summary: &IntegritySummary) -> ChangeLabel {
    if summary.change_count >= 1 {
        ChangeLabel::Changed
    } else {
        ChangeLabel::Intact
    }
}

/// Exact counts per observed change-count value. Values with zero entries
/// are omitted.
pub fn change_distribution(summaries: &[IntegritySummary]) -> BTreeMap<u32, u32> {
    let mut hist = BTreeMap::new();
    for s in summaries {
        *hist.entry(s.change_count).or_insert(0) += 1;
    }
    hist
}
