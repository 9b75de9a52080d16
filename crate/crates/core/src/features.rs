//! Per-URL metric vectors for change classification.
//!
//! Nine base metrics plus K top-domain dummies (24 columns at the default
//! K = 15). Continuous metrics carry a log(x + 1) transform; dichotomous
//! metrics are 0/1. No further scaling or centering is applied anywhere in
//! the pipeline.

pub mod filters;
pub mod psl;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poll::PoolEntry;
use crate::url::ParsedUrl;
use filters::{match_filters, FilterList};
use psl::{domain_count, is_ipv4, sld_or_host, SuffixResolver};

pub const BASE_COLUMNS: [&str; 9] = [
    "incl", "slen", "blck", "qurl", "qdom", "nojs", "ulen", "unum", "dnum",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("feature matrix I/O: {0}")]
    Io(String),
    #[error("feature matrix column mismatch: {0}")]
    ColumnMismatch(String),
}

/// One row of the feature matrix. Continuous entries are log-transformed
/// counts (hence nonnegative); the rest are 0/1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// log(1 + distinct sampled domains including this URL).
    pub incl: f64,
    /// log(1 + first-download byte count).
    pub slen: f64,
    /// URL blocked by the filter list.
    pub blck: f64,
    /// Query field present.
    pub qurl: f64,
    /// Any including domain appears in the query text.
    pub qdom: f64,
    /// Path does not end in `.js`.
    pub nojs: f64,
    /// log(1 + URL character count).
    pub ulen: f64,
    /// log(1 + count of decimal digits in the URL).
    pub unum: f64,
    /// log(1 + host labels in excess of the public suffix).
    pub dnum: f64,
    /// Indicators of the entry's second-level domain among the top-K pool
    /// domains; at most one is set.
    pub dtop: Vec<f64>,
}

impl FeatureVector {
    pub fn dimension(&self) -> usize {
        BASE_COLUMNS.len() + self.dtop.len()
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut row = vec![
            self.incl, self.slen, self.blck, self.qurl, self.qdom, self.nojs, self.ulen,
            self.unum, self.dnum,
        ];
        row.extend(&self.dtop);
        row
    }
}

/// Canonical header for a K-dummy matrix, label column included.
pub fn column_names(top_k: usize) -> Vec<String> {
    let mut names: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    names.extend((1..=top_k).map(|i| format!("dtop_{i}")));
    names.push("label".to_string());
    names
}

fn log1p_count(raw: u64) -> f64 {
    (raw as f64 + 1.0).ln()
}

/// The distinct including domains of a pool entry, in first-seen order.
pub fn including_domains(entry: &PoolEntry) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for back_ref in &entry.back_refs {
        if seen.insert(back_ref.page_domain.clone()) {
            out.push(back_ref.page_domain.clone());
        }
    }
    out
}

/// Computes the metric vector for one qualified pool entry. `top_domains`
/// must be fixed for the whole dataset.
pub fn compute_features(
    entry: &PoolEntry,
    including_domains: &[String],
    filter_list: &FilterList,
    top_domains: &[String],
    resolver: &SuffixResolver,
) -> FeatureVector {
    let parsed = ParsedUrl::parse(&entry.url).ok();
    let query = parsed.as_ref().and_then(|u| u.query.clone());
    let path = parsed.as_ref().map(|u| u.path.clone()).unwrap_or_default();
    let host = parsed.as_ref().map(|u| u.host.clone()).unwrap_or_default();

    let distinct: BTreeSet<&String> = including_domains.iter().collect();
    let incl = log1p_count(distinct.len() as u64);
    let slen = log1p_count(entry.first_length);
    let blck = f64::from(match_filters(&entry.url, filter_list));
    let qurl = f64::from(query.is_some());
    let qdom = f64::from(match &query {
        Some(q) => {
            let q = q.to_ascii_lowercase();
            distinct
                .iter()
                .any(|domain| q.contains(&domain.to_ascii_lowercase()))
        }
        None => false,
    });
    let nojs = f64::from(!path.to_ascii_lowercase().ends_with(".js"));
    let ulen = log1p_count(entry.url.chars().count() as u64);
    let unum = log1p_count(entry.url.chars().filter(char::is_ascii_digit).count() as u64);
    let dnum = log1p_count(u64::from(domain_count(&host, resolver)));

    let entry_domain = sld_or_host(&host, resolver);
    let dtop = top_domains
        .iter()
        .map(|d| f64::from(*d == entry_domain))
        .collect();

    FeatureVector {
        incl,
        slen,
        blck,
        qurl,
        qdom,
        nojs,
        ulen,
        unum,
        dnum,
        dtop,
    }
}

/// Extra columns the default training set excludes: tag attributes seen in
/// back-references, the sniffed buffer type, the raw Content-Type, the
/// top-level domain, and an IPv4-host dummy. Best-effort reconstructions,
/// emitted alongside the matrix for inspection only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedColumns {
    pub url_id: u32,
    pub attr_async: u8,
    pub attr_defer: u8,
    pub attr_crossorigin: u8,
    pub attr_integrity: u8,
    pub sniffed_type: String,
    pub content_type: String,
    pub tld: String,
    pub ipv4_host: u8,
}

pub fn extended_columns(entry: &PoolEntry) -> ExtendedColumns {
    let has_attr = |name: &str| {
        u8::from(
            entry
                .back_refs
                .iter()
                .any(|b| b.attributes.contains(name)),
        )
    };
    let host = ParsedUrl::parse(&entry.url)
        .map(|u| u.host)
        .unwrap_or_default();
    let ipv4 = is_ipv4(&host);
    ExtendedColumns {
        url_id: entry.url_id,
        attr_async: has_attr("async"),
        attr_defer: has_attr("defer"),
        attr_crossorigin: has_attr("crossorigin"),
        attr_integrity: has_attr("integrity"),
        sniffed_type: entry.sniffed_type.name().to_string(),
        content_type: entry.content_type.clone().unwrap_or_default(),
        tld: if ipv4 {
            String::new()
        } else {
            host.rsplit('.').next().unwrap_or_default().to_string()
        },
        ipv4_host: u8::from(ipv4),
    }
}

/// Writes the feature matrix: the canonical header row, then one row per
/// url_id in the given order. Floats render in shortest round-trip form.
pub fn write_feature_matrix(
    path: &Path,
    rows: &[(u32, FeatureVector, u8)],
    top_k: usize,
) -> Result<(), FeatureError> {
    let mut file =
        std::fs::File::create(path).map_err(|e| FeatureError::Io(format!("{path:?}: {e}")))?;
    let header = column_names(top_k).join(",");
    writeln!(file, "{header}").map_err(|e| FeatureError::Io(e.to_string()))?;
    for (_, vector, label) in rows {
        if vector.dtop.len() != top_k {
            return Err(FeatureError::ColumnMismatch(format!(
                "expected {top_k} dtop dummies, found {}",
                vector.dtop.len()
            )));
        }
        let mut cells: Vec<String> = vector.to_row().iter().map(|v| v.to_string()).collect();
        cells.push(label.to_string());
        writeln!(file, "{}", cells.join(",")).map_err(|e| FeatureError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Writes the extended-columns sidecar, keyed by url_id, same row order as
/// the matrix.
pub fn write_extended_columns(
    path: &Path,
    rows: &[ExtendedColumns],
) -> Result<(), FeatureError> {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| FeatureError::Io(format!("{path:?}: {e}")))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| FeatureError::Io(e.to_string()))?;
    }
    writer.flush().map_err(|e| FeatureError::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poll::{BackRef, SniffedType};

    fn entry(url: &str, first_length: u64, includers: &[&str]) -> PoolEntry {
        PoolEntry {
            url_id: 0,
            url: url.to_string(),
            first_digest_hex: String::new(),
            first_length,
            content_type: Some("application/javascript".into()),
            sniffed_type: SniffedType::Javascript,
            back_refs: includers
                .iter()
                .map(|d| BackRef {
                    page_domain: d.to_string(),
                    attributes: BTreeSet::new(),
                })
                .collect(),
        }
    }

    fn compute(entry: &PoolEntry, top: &[&str]) -> FeatureVector {
        let resolver = SuffixResolver::bundled();
        let filters = FilterList::default();
        let top: Vec<String> = top.iter().map(|s| s.to_string()).collect();
        compute_features(
            entry,
            &including_domains(entry),
            &filters,
            &top,
            &resolver,
        )
    }

    #[test]
    fn hand_computed_example() {
        let e = entry(
            "http://cdn.example.com/lib/app.js",
            120,
            &["shop.net", "blog.org"],
        );
        let v = compute(&e, &["example.com", "other.net"]);
        assert_eq!(v.nojs, 0.0);
        assert_eq!(v.qurl, 0.0);
        assert_eq!(v.qdom, 0.0);
        assert_eq!(v.incl, (3.0f64).ln());
        // Host labels cdn + example beyond the suffix.
        assert_eq!(v.dnum, (3.0f64).ln());
        assert_eq!(v.slen, (121.0f64).ln());
        assert_eq!(v.ulen, (34.0f64).ln());
        assert_eq!(v.unum, 0.0);
        assert_eq!(v.dtop, vec![1.0, 0.0]);
        assert_eq!(v.dimension(), 11);
    }

    #[test]
    fn qdom_matches_an_including_domain_in_the_query() {
        let e = entry(
            "https://t.example.net/track?site=shop.net&id=1",
            10,
            &["shop.net"],
        );
        let v = compute(&e, &[]);
        assert_eq!(v.qurl, 1.0);
        assert_eq!(v.qdom, 1.0);

        let other = entry("https://t.example.net/track?site=xyz", 10, &["shop.net"]);
        assert_eq!(compute(&other, &[]).qdom, 0.0);
    }

    #[test]
    fn nojs_for_non_script_paths() {
        assert_eq!(compute(&entry("https://a.net/", 1, &[]), &[]).nojs, 1.0);
        assert_eq!(compute(&entry("https://a.net/x.js", 1, &[]), &[]).nojs, 0.0);
        assert_eq!(
            compute(&entry("https://a.net/gen?f=.js", 1, &[]), &[]).nojs,
            1.0
        );
    }

    #[test]
    fn unum_counts_digits_across_the_whole_url() {
        let v = compute(&entry("https://a1.net/v2/x3.js?t=45", 1, &[]), &[]);
        assert_eq!(v.unum, (6.0f64).ln());
    }

    #[test]
    fn dtop_sets_at_most_one_dummy() {
        let e = entry("https://static.cdn.net/a.js", 1, &[]);
        let v = compute(&e, &["cdn.net", "other.org", "cdn.net2"]);
        assert_eq!(v.dtop, vec![1.0, 0.0, 0.0]);
        assert!(v.dtop.iter().sum::<f64>() <= 1.0);
    }

    #[test]
    fn ipv4_hosts_have_zero_dnum() {
        let v = compute(&entry("http://192.168.0.1/x.js", 1, &[]), &[]);
        assert_eq!(v.dnum, 0.0);
    }

    #[test]
    fn blck_uses_the_filter_list() {
        let e = entry("https://ad.doubleclick.net/x.js", 1, &[]);
        let resolver = SuffixResolver::bundled();
        let filters = FilterList::parse("||doubleclick.net^");
        let v = compute_features(&e, &[], &filters, &[], &resolver);
        assert_eq!(v.blck, 1.0);
    }

    #[test]
    fn column_names_match_dimension() {
        let names = column_names(15);
        assert_eq!(names.len(), 9 + 15 + 1);
        assert_eq!(names[0], "incl");
        assert_eq!(names[9], "dtop_1");
        assert_eq!(names[23], "dtop_15");
        assert_eq!(names[24], "label");
    }

    #[test]
    fn extended_columns_reflect_back_ref_attributes() {
        let mut e = entry("https://cdn.net/a.js", 1, &["x.com"]);
        e.back_refs[0].attributes.insert("async".into());
        e.back_refs[0].attributes.insert("integrity".into());
        let ext = extended_columns(&e);
        assert_eq!(ext.attr_async, 1);
        assert_eq!(ext.attr_defer, 0);
        assert_eq!(ext.attr_integrity, 1);
        assert_eq!(ext.tld, "net");
        assert_eq!(ext.ipv4_host, 0);
    }

    #[test]
    fn matrix_round_trips_through_the_file(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        let e = entry("https://cdn.net/a.js?v=12", 99, &["x.com", "y.org"]);
        let v = compute(&e, &["cdn.net", "zzz.net"]);
        write_feature_matrix(&path, &[(0, v.clone(), 1)], 2).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), column_names(2).join(","));
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|c| c.parse().unwrap())
            .collect();
        let mut expected = v.to_row();
        expected.push(1.0);
        assert_eq!(row, expected);
    }
}
