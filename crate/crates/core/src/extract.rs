//! `<script>` tag extraction and cross-origin classification.
//!
//! Extraction is a forgiving tokenizer, not a tree builder: `<script` start
//! tags are located case-insensitively in the raw bytes and their attributes
//! parsed up to the closing `>`. Tags inside comments or CDATA are still
//! reported; only script tags matter here, and over-approximation beats
//! omission for this purpose. Unparseable regions are skipped, never fatal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::url::{same_origin, OriginPolicy, ParsedUrl, UrlError};

/// One `<script>` start tag that carries a non-empty `src` attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptTag {
    /// The `src` value exactly as written.
    pub raw_src: String,
    /// Lowercased attribute name to optional value; first occurrence wins.
    pub attributes: BTreeMap<String, Option<String>>,
    /// Byte position of the `<` in the document.
    pub byte_offset: usize,
}

impl ScriptTag {
    pub fn has_attribute(&self, name: &str) -> bool {
        self.attributes.contains_key(name)
    }

    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).and_then(|v| v.as_deref())
    }
}

/// A script inclusion resolved against the page that carried it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRef {
    /// The visited, post-redirect page URL.
    pub page_url: ParsedUrl,
    /// The absolute script URL after reference resolution.
    pub script_url: ParsedUrl,
    pub cross_origin: bool,
    pub tag: ScriptTag,
}

/// A tag whose src could not be resolved or whose origin is undecidable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefWarning {
    pub byte_offset: usize,
    pub raw_src: String,
    pub error: UrlError,
}

/// Extracts every `<script>` element with a `src` attribute, in document
/// order. Tolerates unclosed tags and all three attribute quoting styles.
pub fn extract_script_tags(html: &[u8]) -> Vec<ScriptTag> {
    let mut tags = Vec::new();
    let mut pos = 0;
    while let Some(start) = find_script_open(html, pos) {
        let (attributes, end) = parse_attributes(html, start + "<script".len());
        if let Some(Some(src)) = attributes.get("src") {
            if !src.is_empty() {
                tags.push(ScriptTag {
                    raw_src: src.clone(),
                    attributes,
                    byte_offset: start,
                });
            }
        }
        pos = end.max(start + 1);
    }
    tags
}

/// Locates the next `<script` start tag (case-insensitive) followed by a
/// word boundary, so `<scriptx` never matches.
fn find_script_open(html: &[u8], from: usize) -> Option<usize> {
    const NEEDLE: &[u8] = b"<script";
    let mut i = from;
    while i + NEEDLE.len() <= html.len() {
        if html[i] == b'<'
            && html[i..i + NEEDLE.len()].eq_ignore_ascii_case(NEEDLE)
        {
            match html.get(i + NEEDLE.len()) {
                None => return Some(i),
                Some(&b) if b.is_ascii_whitespace() || b == b'>' || b == b'/' => return Some(i),
                _ => {}
            }
        }
        i += 1;
    }
    None
}

/// Parses attributes from after the tag name to the closing `>` (or EOF).
/// Returns the attribute map and the byte position just past the tag.
fn parse_attributes(html: &[u8], from: usize) -> (BTreeMap<String, Option<String>>, usize) {
    let mut attributes = BTreeMap::new();
    let mut i = from;
    loop {
        while i < html.len() && (html[i].is_ascii_whitespace() || html[i] == b'/') {
            i += 1;
        }
        if i >= html.len() {
            return (attributes, html.len());
        }
        if html[i] == b'>' {
            return (attributes, i + 1);
        }
        if html[i] == b'<' {
            // An unclosed tag ends where the next one begins.
            return (attributes, i);
        }

        let name_start = i;
        while i < html.len()
            && !html[i].is_ascii_whitespace()
            && !matches!(html[i], b'=' | b'>' | b'/')
        {
            i += 1;
        }
        let name = String::from_utf8_lossy(&html[name_start..i]).to_ascii_lowercase();

        while i < html.len() && html[i].is_ascii_whitespace() {
            i += 1;
        }
        let value = if i < html.len() && html[i] == b'=' {
            i += 1;
            while i < html.len() && html[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < html.len() && (html[i] == b'"' || html[i] == b'\'') {
                let quote = html[i];
                i += 1;
                let value_start = i;
                while i < html.len() && html[i] != quote {
                    i += 1;
                }
                let value = String::from_utf8_lossy(&html[value_start..i]).into_owned();
                if i < html.len() {
                    i += 1; // closing quote
                }
                Some(value)
            } else {
                let value_start = i;
                while i < html.len() && !html[i].is_ascii_whitespace() && html[i] != b'>' {
                    i += 1;
                }
                Some(String::from_utf8_lossy(&html[value_start..i]).into_owned())
            }
        } else {
            None
        };

        if !name.is_empty() {
            attributes.entry(name).or_insert(value);
        } else if i < html.len() && html[i] != b'>' {
            i += 1; // skip a stray byte so the scan always advances
        }
    }
}

/// Resolves each tag's src against the visited page URL and flags it as
/// cross-origin under the standard policy. Tags whose src fails resolution
/// (or whose scheme has no origin) are dropped into the warning list.
pub fn classify_refs(page: &ParsedUrl, tags: &[ScriptTag]) -> (Vec<ScriptRef>, Vec<RefWarning>) {
    let mut refs = Vec::new();
    let mut warnings = Vec::new();
    let page_origin = match page.origin() {
        Ok(o) => o,
        Err(error) => {
            warnings.extend(tags.iter().map(|tag| RefWarning {
                byte_offset: tag.byte_offset,
                raw_src: tag.raw_src.clone(),
                error: error.clone(),
            }));
            return (refs, warnings);
        }
    };
    for tag in tags {
        let resolved = page.resolve(&tag.raw_src).and_then(|script_url| {
            let script_origin = script_url.origin()?;
            Ok((script_url, script_origin))
        });
        match resolved {
            Ok((script_url, script_origin)) => refs.push(ScriptRef {
                page_url: page.clone(),
                script_url,
                cross_origin: !same_origin(&page_origin, &script_origin, OriginPolicy::Standard),
                tag: tag.clone(),
            }),
            Err(error) => warnings.push(RefWarning {
                byte_offset: tag.byte_offset,
                raw_src: tag.raw_src.clone(),
                error,
            }),
        }
    }
    (refs, warnings)
}

/// The attributes whose prevalence the reports track.
pub const TRACKED_ATTRIBUTES: [&str; 4] = ["async", "defer", "crossorigin", "integrity"];

/// For each tracked attribute, the percentage of pool URLs with at least one
/// including tag bearing it. Pool URLs are matched against refs by exact
/// serialized script URL.
pub fn attribute_prevalence(refs: &[ScriptRef], pool: &[String]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for attr in TRACKED_ATTRIBUTES {
        let hits = pool
            .iter()
            .filter(|url| {
                refs.iter()
                    .any(|r| r.tag.has_attribute(attr) && &r.script_url.to_string() == *url)
            })
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
