//! Polling-pool construction and timed fetch rounds.
//!
//! Each qualified cross-origin URL is fetched once per round with the exact
//! URL string the including page used; successful downloads are hashed with
//! SHA-1 and failures become ⊥ records carrying an error class. Rounds are
//! indexed logically by `t`, not by wall clock, so missed scheduler runs do
//! not corrupt a series.

use std::collections::BTreeSet;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::extract::ScriptRef;
use crate::fetch::{fetch_all, ErrorClass, Fetch, FetchConfig};
use crate::sri::{compute_digest, Digest, HashAlgorithm};

/// Content classification of a downloaded buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SniffedType {
    Javascript,
    Html,
    Text,
    Binary,
    Empty,
}

impl SniffedType {
    pub fn name(self) -> &'static str {
        match self {
            SniffedType::Javascript => "javascript",
            SniffedType::Html => "html",
            SniffedType::Text => "text",
            SniffedType::Binary => "binary",
            SniffedType::Empty => "empty",
        }
    }
}

/// One back-reference from a pooled URL to an including page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackRef {
    /// Second-level domain of the including page (the host itself for IPv4
    /// pages).
    pub page_domain: String,
    /// Lowercased attribute names on the including tag.
    pub attributes: BTreeSet<String>,
}

/// A qualified member of the polling pool: first fetch returned HTTP 200
/// with a non-empty body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub url_id: u32,
    /// Byte-identical to the tag's resolved URL, including query and
    /// fragment.
    pub url: String,
    pub first_digest_hex: String,
    pub first_length: u64,
    pub content_type: Option<String>,
    pub sniffed_type: SniffedType,
    pub back_refs: Vec<BackRef>,
}

/// A URL that failed pool qualification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub url: String,
    pub reason: String,
}

/// Outcome of one poll fetch: a digest or ⊥ with its error class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PollOutcome {
    Ok { digest: Digest, length: u64 },
    Bottom(ErrorClass),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PollRecord {
    pub url_id: u32,
    /// Logical round index.
    pub t: u32,
    /// UTC seconds.
    pub timestamp: u64,
    pub outcome: PollOutcome,
    /// URL after redirects, when the fetch got that far.
    pub final_url: Option<String>,
}

/// The per-URL time series of poll records, ordered by round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashSeries {
    pub url_id: u32,
    pub records: Vec<PollRecord>,
}

impl HashSeries {
    /// Groups a poll log into per-URL series, sorted by round index.
    /// Records sharing a round keep the first occurrence.
    pub fn group(records: Vec<PollRecord>) -> Vec<HashSeries> {
        let mut by_url: std::collections::BTreeMap<u32, Vec<PollRecord>> =
            std::collections::BTreeMap::new();
        for record in records {
            by_url.entry(record.url_id).or_default().push(record);
        }
        by_url
            .into_iter()
            .map(|(url_id, mut records)| {
                records.sort_by_key(|r| r.t);
                records.dedup_by_key(|r| r.t);
                HashSeries { url_id, records }
            })
            .collect()
    }
}

/// Builds the polling pool from cross-origin refs: one entry per unique URL
/// string, each downloaded once with the exact original URL. Downloads that
/// are not HTTP 200 with a non-empty body are rejected with a reason.
/// `page_domain` maps an including page URL to the domain recorded in its
/// back-references (normally the registrable domain of the page host).
pub fn build_pool<F: Fetch + ?Sized>(
    refs: &[ScriptRef],
    fetcher: &F,
    config: &FetchConfig,
    page_domain: impl Fn(&crate::url::ParsedUrl) -> String,
) -> (Vec<PoolEntry>, Vec<Rejection>) {
    // Dedupe by exact URL string in first-seen order, merging back-refs.
    let mut order: Vec<String> = Vec::new();
    let mut back_refs: std::collections::HashMap<String, Vec<BackRef>> =
        std::collections::HashMap::new();
    for r in refs {
        let url = r.script_url.to_string();
        if !back_refs.contains_key(&url) {
            order.push(url.clone());
        }
        back_refs.entry(url).or_default().push(BackRef {
            page_domain: page_domain(&r.page_url),
            attributes: r.tag.attributes.keys().cloned().collect(),
        });
    }

    let jobs: Vec<(String, String)> = order
        .iter()
        .map(|url| (host_of(url), url.clone()))
        .collect();
    let results = fetch_all(&jobs, fetcher, config);

    let mut pool = Vec::new();
    let mut rejections = Vec::new();
    let mut next_id = 0u32;
    for (url, result) in order.into_iter().zip(results) {
        match result {
            Ok(response) if response.status == 200 && !response.body.is_empty() => {
                let digest = compute_digest(&response.body, HashAlgorithm::Sha1);
                let sniffed = sniff_type(&response.body, response.content_type.as_deref());
                pool.push(PoolEntry {
                    url_id: next_id,
                    first_digest_hex: digest.hex(),
                    first_length: response.body.len() as u64,
                    content_type: response.content_type,
                    sniffed_type: sniffed,
                    back_refs: back_refs.remove(&url).unwrap_or_default(),
                    url,
                });
                next_id += 1;
            }
            Ok(response) if response.status != 200 => rejections.push(Rejection {
                url,
                reason: ErrorClass::HttpStatus(response.status).to_string(),
            }),
            Ok(_) => rejections.push(Rejection {
                url,
                reason: ErrorClass::EmptyBody.to_string(),
            }),
            Err(e) => rejections.push(Rejection {
                url,
                reason: e.to_string(),
            }),
        }
    }
    (pool, rejections)
}

/// Executes round `t` over the pool: exactly one record per entry, in
/// url_id order. Individual failures become ⊥ records; a round never
/// aborts.
pub fn poll_round<F: Fetch + ?Sized>(
    pool: &[PoolEntry],
    t: u32,
    fetcher: &F,
    config: &FetchConfig,
) -> Vec<PollRecord> {
    let jobs: Vec<(String, String)> = pool
        .iter()
        .map(|entry| (host_of(&entry.url), entry.url.clone()))
        .collect();
    let results = fetch_all(&jobs, fetcher, config);
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    let mut records: Vec<PollRecord> = pool
        .iter()
        .zip(results)
        .map(|(entry, result)| {
            let (outcome, final_url) = match result {
                Ok(response) if response.status == 200 && !response.body.is_empty() => (
                    PollOutcome::Ok {
                        digest: compute_digest(&response.body, HashAlgorithm::Sha1),
                        length: response.body.len() as u64,
                    },
                    Some(response.final_url),
                ),
                Ok(response) if response.status != 200 => (
                    PollOutcome::Bottom(ErrorClass::HttpStatus(response.status)),
                    Some(response.final_url),
                ),
                Ok(response) => (
                    PollOutcome::Bottom(ErrorClass::EmptyBody),
                    Some(response.final_url),
                ),
                Err(e) => (PollOutcome::Bottom(e), None),
            };
            PollRecord {
                url_id: entry.url_id,
                t,
                timestamp,
                outcome,
                final_url,
            }
        })
        .collect();
    records.sort_by_key(|r| r.url_id);
    records
}

/// Best-effort host extraction for scheduling; falls back to the whole URL
/// when it does not parse (such URLs fail fetching anyway).
fn host_of(url: &str) -> String {
    crate::url::ParsedUrl::parse(url)
        .map(|u| u.host)
        .unwrap_or_else(|_| url.to_string())
}

/// Heuristic buffer classification, in fixed precedence: empty, HTML
/// prefix, binary byte ratio, JavaScript tokens (or a JavaScript media
/// type), else text. Only the first KiB is inspected.
pub fn sniff_type(content: &[u8], declared: Option<&str>) -> SniffedType {
    if content.is_empty() {
        return SniffedType::Empty;
    }
    let head = &content[..content.len().min(1024)];

    let trimmed: Vec<u8> = head
        .iter()
        .copied()
        .skip_while(|b| b.is_ascii_whitespace())
        .collect();
    let lower: Vec<u8> = trimmed.iter().map(|b| b.to_ascii_lowercase()).collect();
    if lower.starts_with(b"<!doctype") || lower.starts_with(b"<html") {
        return SniffedType::Html;
    }

    let non_text = head
        .iter()
        .filter(|&&b| !(0x20..=0x7e).contains(&b) && !matches!(b, b'\t' | b'\n' | b'\r' | 0x0c))
        .count();
    if non_text * 10 > head.len() {
        return SniffedType::Binary;
    }

    if let Some(ct) = declared {
        let ct = ct.to_ascii_lowercase();
        if ct.contains("javascript") || ct.contains("ecmascript") {
            return SniffedType::Javascript;
        }
    }
    const JS_TOKENS: [&str; 8] = [
        "function", "var ", "let ", "const ", "=>", "(){", "/*", "//",
    ];
    let text = String::from_utf8_lossy(head);
    if JS_TOKENS.iter().any(|token| text.contains(token)) {
        return SniffedType::Javascript;
    }
    SniffedType::Text
}
