//! Descriptive outputs: change histogram, domain rankings, attribute
//! prevalence, contingency tables, and a human-readable summary.
//!
//! Everything is emitted as plain delimited text meant to be piped into a
//! plotting tool. Outputs carry no timestamps, so regenerating a report
//! over the same inputs yields byte-identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::extract::TRACKED_ATTRIBUTES;
use crate::features::psl::{sld_or_host, SuffixResolver};
use crate::features::FeatureVector;
use crate::integrity::{change_distribution, IntegritySummary};
use crate::poll::{PoolEntry, SniffedType};
use crate::url::ParsedUrl;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("metric `{0}` is not dichotomous (expected one of https, qurl, fragment, jspath, qdom, blck)")]
    UnknownMetric(String),
    #[error("nothing to report: {0}")]
    NoData(String),
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error("writing report: {0}")]
    Io(String),
}

/// Top-K second-level domains, ranked two ways: by distinct pool URLs
/// hosted and by total inclusion back-references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainRanking {
    pub by_urls: Vec<(String, u64)>,
    pub by_inclusions: Vec<(String, u64)>,
}

/// Aggregates pool hosts into second-level domains and ranks them.
/// Ranked by count descending, ties broken lexicographically.
pub fn rank_domains(pool: &[PoolEntry], k: usize, resolver: &SuffixResolver) -> DomainRanking {
    let mut url_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut inclusion_counts: BTreeMap<String, u64> = BTreeMap::new();
    for entry in pool {
        let host = ParsedUrl::parse(&entry.url)
            .map(|u| u.host)
            .unwrap_or_else(|_| entry.url.clone());
        let domain = sld_or_host(&host, resolver);
        *url_counts.entry(domain.clone()).or_insert(0) += 1;
        *inclusion_counts.entry(domain).or_insert(0) += entry.back_refs.len() as u64;
    }
    DomainRanking {
        by_urls: rank(url_counts, k),
        by_inclusions: rank(inclusion_counts, k),
    }
}

fn rank(counts: BTreeMap<String, u64>, k: usize) -> Vec<(String, u64)> {
    let mut entries: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c >= 1).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k);
    entries
}

/// 2x2 counts of a dichotomous metric against the intact/changed label:
/// `counts[metric_value][label]` with label 0 = intact, 1 = changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub metric: String,
    pub counts: [[u64; 2]; 2],
}

pub const DICHOTOMOUS_METRICS: [&str; 6] = ["https", "qurl", "fragment", "jspath", "qdom", "blck"];

/// Builds the contingency table for one named dichotomous metric. Every
/// summarized url_id must be present in both the pool and the feature rows.
pub fn contingency(
    summaries: &[IntegritySummary],
    pool: &[PoolEntry],
    features: &[(u32, FeatureVector)],
    metric: &str,
) -> Result<ContingencyTable, ReportError> {
    if !DICHOTOMOUS_METRICS.contains(&metric) {
        return Err(ReportError::UnknownMetric(metric.to_string()));
    }
    let by_id: BTreeMap<u32, &PoolEntry> = pool.iter().map(|e| (e.url_id, e)).collect();
    let vectors: BTreeMap<u32, &FeatureVector> =
        features.iter().map(|(id, v)| (*id, v)).collect();

    let mut counts = [[0u64; 2]; 2];
    for summary in summaries {
        let entry = by_id.get(&summary.url_id).ok_or_else(|| {
            ReportError::Inconsistent(format!("url_id {} missing from pool", summary.url_id))
        })?;
        let vector = vectors.get(&summary.url_id).ok_or_else(|| {
            ReportError::Inconsistent(format!("url_id {} missing from features", summary.url_id))
        })?;
        let parsed = ParsedUrl::parse(&entry.url).ok();
        let value = match metric {
            "https" => parsed.as_ref().map_or(false, |u| u.scheme == "https"),
            "fragment" => parsed.as_ref().map_or(false, |u| u.fragment.is_some()),
            "qurl" => vector.qurl == 1.0,
            "qdom" => vector.qdom == 1.0,
            "blck" => vector.blck == 1.0,
            // The `.js`-path view is the negation of nojs.
            "jspath" => vector.nojs == 0.0,
            _ => unreachable!(),
        };
        let label = usize::from(!summary.intact);
        counts[usize::from(value)][label] += 1;
    }
    Ok(ContingencyTable {
        metric: metric.to_string(),
        counts,
    })
}

/// Share of pool URLs with at least one back-reference bearing each tracked
/// attribute.
pub fn attribute_prevalence_from_pool(pool: &[PoolEntry]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for attr in TRACKED_ATTRIBUTES {
        let hits = pool
            .iter()
            .filter(|e| e.back_refs.iter().any(|b| b.attributes.contains(attr)))
            .count();
        let pct = if pool.is_empty() {
            0.0
        } else {
            100.0 * hits as f64 / pool.len() as f64
        };
        out.insert(attr.to_string(), pct);
    }
    out
}

pub struct ReportInputs<'a> {
    pub pool: &'a [PoolEntry],
    pub summaries: &'a [IntegritySummary],
    pub features: &'a [(u32, FeatureVector)],
    pub resolver: &'a SuffixResolver,
    pub top_k: usize,
}

/// Writes the full report directory. Returns the files written.
pub fn emit_report(inputs: &ReportInputs<'_>, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    if inputs.summaries.is_empty() {
        return Err(ReportError::NoData("no integrity summaries".into()));
    }
    if inputs.pool.is_empty() {
        return Err(ReportError::NoData("empty pool".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| ReportError::Io(e.to_string()))?;
    let mut written = Vec::new();
    let mut write = |name: &str, content: String| -> Result<(), ReportError> {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|e| ReportError::Io(format!("{name}: {e}")))?;
        written.push(path);
        Ok(())
    };

    let hist = change_distribution(inputs.summaries);
    let mut hist_csv = String::from("change_count,count\n");
    for (changes, count) in &hist {
        hist_csv.push_str(&format!("{changes},{count}\n"));
    }
    write("changes_hist.csv", hist_csv)?;

    let ranking = rank_domains(inputs.pool, inputs.top_k, inputs.resolver);
    let mut by_urls = String::from("domain,url_count\n");
    for (domain, count) in &ranking.by_urls {
        by_urls.push_str(&format!("{domain},{count}\n"));
    }
    write("domains_by_urls.csv", by_urls)?;
    let mut by_inclusions = String::from("domain,inclusion_count\n");
    for (domain, count) in &ranking.by_inclusions {
        by_inclusions.push_str(&format!("{domain},{count}\n"));
    }
    write("domains_by_inclusions.csv", by_inclusions)?;

    let prevalence = attribute_prevalence_from_pool(inputs.pool);
    let mut prevalence_csv = String::from("attribute,percent\n");
    for (attr, pct) in &prevalence {
        prevalence_csv.push_str(&format!("{attr},{pct:.1}\n"));
    }
    write("attribute_prevalence.csv", prevalence_csv)?;

    for metric in DICHOTOMOUS_METRICS {
        let table = contingency(inputs.summaries, inputs.pool, inputs.features, metric)?;
        let mut csv = String::from("value,intact,changed\n");
        for value in 0..2 {
            csv.push_str(&format!(
                "{value},{},{}\n",
                table.counts[value][0], table.counts[value][1]
            ));
        }
        write(&format!("contingency_{metric}.csv"), csv)?;
    }

    let mut type_counts: BTreeMap<SniffedType, u64> = BTreeMap::new();
    for entry in inputs.pool {
        *type_counts.entry(entry.sniffed_type).or_insert(0) += 1;
    }
    let mut types_csv = String::from("type,count\n");
    for (sniffed, count) in &type_counts {
        types_csv.push_str(&format!("{},{count}\n", sniffed.name()));
    }
    write("sniffed_types.csv", types_csv)?;

    let changed = inputs.summaries.iter().filter(|s| !s.intact).count();
    let total = inputs.summaries.len();
    let share = 100.0 * changed as f64 / total as f64;
    let max_changes = hist.keys().max().copied().unwrap_or(0);
    let mut summary = String::new();
    summary.push_str(&format!("pool entries: {}\n", inputs.pool.len()));
    summary.push_str(&format!("summarized entries: {total}\n"));
    summary.push_str(&format!("changed entries: {changed}\n"));
    summary.push_str(&format!("share changed: {share:.1}%\n"));
    summary.push_str(&format!("max change count: {max_changes}\n"));
    summary.push_str("attribute prevalence:\n");
    for (attr, pct) in &prevalence {
        summary.push_str(&format!("  {attr}: {pct:.1}%\n"));
    }
    summary.push_str("sniffed types:\n");
    for (sniffed, count) in &type_counts {
        summary.push_str(&format!("  {}: {count}\n", sniffed.name()));
    }
    if inputs.resolver.is_heuristic() {
        summary.push_str(
            "caveat: registrable domains resolved with the last-two-labels heuristic\n",
        );
    }
    summary.push_str(
        "caveat: script discovery parses static HTML; dynamically injected scripts are not observed\n",
    );
    write("summary.txt", summary)?;

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poll::BackRef;
    use std::collections::BTreeSet;

    fn entry(url_id: u32, url: &str, includers: usize) -> PoolEntry {
        PoolEntry {
            url_id,
            url: url.to_string(),
            first_digest_hex: "00".into(),
            first_length: 10,
            content_type: None,
            sniffed_type: SniffedType::Javascript,
            back_refs: (0..includers)
                .map(|i| BackRef {
                    page_domain: format!("page{i}.example"),
                    attributes: BTreeSet::new(),
                })
                .collect(),
        }
    }

    fn summary(url_id: u32, change_count: u32) -> IntegritySummary {
        IntegritySummary {
            url_id,
            unique_hashes: BTreeSet::new(),
            change_count,
            intact: change_count == 0,
            observed_rounds: 10,
            failed_rounds: 0,
            transition_count: change_count,
        }
    }

    fn vector(qurl: f64, nojs: f64) -> FeatureVector {
        FeatureVector {
            incl: 0.0,
            slen: 0.0,
            blck: 0.0,
            qurl,
            qdom: 0.0,
            nojs,
            ulen: 0.0,
            unum: 0.0,
            dnum: 0.0,
            dtop: vec![],
        }
    }

    #[test]
    fn rank_domains_aggregates_both_ways() {
        let resolver = SuffixResolver::bundled();
        let pool = vec![
            entry(0, "https://a.cdn.com/1.js", 3),
            entry(1, "https://a.cdn.com/2.js", 2),
            entry(2, "https://b.cdn.com/3.js", 2),
            entry(3, "https://b.net/x.js", 2),
        ];
        let ranking = rank_domains(&pool, 15, &resolver);
        assert_eq!(
            ranking.by_urls,
            vec![("cdn.com".to_string(), 3), ("b.net".to_string(), 1)]
        );
        assert_eq!(
            ranking.by_inclusions,
            vec![("cdn.com".to_string(), 7), ("b.net".to_string(), 2)]
        );
    }

    #[test]
    fn rank_domains_truncates_and_breaks_ties_lexicographically() {
        let resolver = SuffixResolver::bundled();
        let pool = vec![
            entry(0, "https://zz.net/a.js", 1),
            entry(1, "https://aa.net/b.js", 1),
            entry(2, "https://mm.net/c.js", 1),
        ];
        let ranking = rank_domains(&pool, 2, &resolver);
        assert_eq!(
            ranking.by_urls,
            vec![("aa.net".to_string(), 1), ("mm.net".to_string(), 1)]
        );
    }

    #[test]
    fn contingency_degenerate_case() {
        // 4 entries, all changed, all with query.
        let pool: Vec<PoolEntry> = (0..4)
            .map(|i| entry(i, &format!("https://c.net/{i}.js?x=1"), 1))
            .collect();
        let summaries: Vec<IntegritySummary> = (0..4).map(|i| summary(i, 2)).collect();
        let features: Vec<(u32, FeatureVector)> =
            (0..4).map(|i| (i, vector(1.0, 0.0))).collect();
        let table = contingency(&summaries, &pool, &features, "qurl").unwrap();
        assert_eq!(table.counts, [[0, 0], [0, 4]]);
    }

    #[test]
    fn contingency_rejects_continuous_metrics() {
        let pool = vec![entry(0, "https://c.net/a.js", 1)];
        let summaries = vec![summary(0, 0)];
        let features = vec![(0, vector(0.0, 0.0))];
        assert_eq!(
            contingency(&summaries, &pool, &features, "ulen"),
            Err(ReportError::UnknownMetric("ulen".into()))
        );
    }

    #[test]
    fn contingency_splits_by_metric_and_label() {
        let pool = vec![
            entry(0, "https://c.net/a.js?q=1", 1),
            entry(1, "https://c.net/b.js", 1),
            entry(2, "http://c.net/c.js?q=1", 1),
            entry(3, "http://c.net/d", 1),
        ];
        let summaries = vec![summary(0, 1), summary(1, 0), summary(2, 0), summary(3, 3)];
        let features = vec![
            (0, vector(1.0, 0.0)),
            (1, vector(0.0, 0.0)),
            (2, vector(1.0, 0.0)),
            (3, vector(0.0, 1.0)),
        ];
        let qurl = contingency(&summaries, &pool, &features, "qurl").unwrap();
        assert_eq!(qurl.counts, [[1, 1], [1, 1]]);
        let https = contingency(&summaries, &pool, &features, "https").unwrap();
        assert_eq!(https.counts, [[1, 1], [1, 1]]);
        let jspath = contingency(&summaries, &pool, &features, "jspath").unwrap();
        assert_eq!(jspath.counts, [[0, 1], [2, 1]]);
        let total: u64 = qurl.counts.iter().flatten().sum();
        assert_eq!(total, summaries.len() as u64);
    }

    #[test]
    fn prevalence_from_pool_counts_attribute_back_refs() {
        let mut pool = vec![entry(0, "https://c.net/a.js", 1), entry(1, "https://c.net/b.js", 1)];
        pool[0].back_refs[0].attributes.insert("async".into());
        let prevalence = attribute_prevalence_from_pool(&pool);
        assert_eq!(prevalence["async"], 50.0);
        assert_eq!(prevalence["integrity"], 0.0);
    }

    #[test]
    fn emit_report_is_idempotent_and_recomputable() {
        let resolver = SuffixResolver::bundled();
        let pool: Vec<PoolEntry> = (0..4)
            .map(|i| entry(i, &format!("https://cdn.example/{i}.js"), 1))
            .collect();
        let summaries: Vec<IntegritySummary> =
            (0..4).map(|i| summary(i, if i == 0 { 2 } else { 0 })).collect();
        let features: Vec<(u32, FeatureVector)> =
            (0..4).map(|i| (i, vector(0.0, 0.0))).collect();
        let inputs = ReportInputs {
            pool: &pool,
            summaries: &summaries,
            features: &features,
            resolver: &resolver,
            top_k: 15,
        };
        let dir = tempfile::tempdir().unwrap();
        let first = emit_report(&inputs, dir.path()).unwrap();
        let snapshot: Vec<(PathBuf, Vec<u8>)> = first
            .iter()
            .map(|p| (p.clone(), std::fs::read(p).unwrap()))
            .collect();
        emit_report(&inputs, dir.path()).unwrap();
        for (path, bytes) in snapshot {
            assert_eq!(std::fs::read(&path).unwrap(), bytes, "{path:?} changed");
        }
        let summary_text =
            std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(summary_text.contains("share changed: 25.0%"));
        let hist = std::fs::read_to_string(dir.path().join("changes_hist.csv")).unwrap();
        assert_eq!(hist, "change_count,count\n0,3\n2,1\n");
    }

    #[test]
    fn emit_report_requires_summaries() {
        let resolver = SuffixResolver::bundled();
        let pool = vec![entry(0, "https://c.net/a.js", 1)];
        let inputs = ReportInputs {
            pool: &pool,
            summaries: &[],
            features: &[],
            resolver: &resolver,
            top_k: 15,
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit_report(&inputs, dir.path()),
            Err(ReportError::NoData(_))
        ));
    }
}
