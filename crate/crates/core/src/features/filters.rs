//! Offline ad-block filter matching.
//!
//! Supports the network-rule subset that matters for script URLs: `||`
//! domain anchors, `|` edge anchors, `*` wildcards, the `^` separator
//! class, plain substrings, `@@` exceptions, and the `$domain=`/`$script`
//! options. Rules carrying any other option never match (conservative), so
//! an unsupported modifier can only under-block. Cosmetic rules and
//! unparseable lines are counted and skipped, never fatal.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Wildcard,
    Separator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StartAnchor {
    /// Match anywhere.
    None,
    /// `|` — match from the start of the URL.
    UrlStart,
    /// `||` — match from the host or any subdomain boundary within it.
    Domain,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct RuleOptions {
    /// `$domain=a.com|~b.com` positive entries.
    domains: Vec<String>,
    /// Negated (`~`) entries.
    excluded_domains: Vec<String>,
    /// `$script` seen (all URLs matched here are script requests, so this
    /// is satisfied); `$~script` makes the rule never match.
    not_script: bool,
    /// Any option outside the supported set.
    unsupported: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterRule {
    segments: Vec<Segment>,
    start: StartAnchor,
    end_anchor: bool,
    options: RuleOptions,
    /// The source line, for diagnostics.
    pub source: String,
}

/// A parsed filter list: block rules plus `@@` exception rules.
#[derive(Debug, Clone, Default)]
pub struct FilterList {
    pub rules: Vec<FilterRule>,
    pub exceptions: Vec<FilterRule>,
    /// Comment, cosmetic, and unparseable lines.
    pub skipped: usize,
}

impl FilterList {
    pub fn parse(text: &str) -> FilterList {
        let mut list = FilterList::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty()
                || line.starts_with('!')
                || line.starts_with('[')
                // Cosmetic / element-hiding rules are out of scope.
                || line.contains("##")
                || line.contains("#@#")
                || line.contains("#?#")
            {
                list.skipped += 1;
                continue;
            }
            let (is_exception, body) = match line.strip_prefix("@@") {
                Some(rest) => (true, rest),
                None => (false, line),
            };
            match FilterRule::parse(body) {
                Some(rule) => {
                    if is_exception {
                        list.exceptions.push(rule);
                    } else {
                        list.rules.push(rule);
                    }
                }
                None => list.skipped += 1,
            }
        }
        list
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && self.exceptions.is_empty()
    }
}

impl FilterRule {
    fn parse(body: &str) -> Option<FilterRule> {
        let source = body.to_string();
        let (pattern, options_text) = match body.rfind('$') {
            // A `$` inside a path could be a literal; treat it as the option
            // separator only when the tail looks like an option list.
            Some(pos) if looks_like_options(&body[pos + 1..]) => {
                (&body[..pos], Some(&body[pos + 1..]))
            }
            _ => (body, None),
        };
        let options = match options_text {
            Some(text) => parse_options(text),
            None => RuleOptions::default(),
        };

        let mut pattern = pattern;
        let mut start = StartAnchor::None;
        if let Some(rest) = pattern.strip_prefix("||") {
            start = StartAnchor::Domain;
            pattern = rest;
        } else if let Some(rest) = pattern.strip_prefix('|') {
            start = StartAnchor::UrlStart;
            pattern = rest;
        }
        let mut end_anchor = false;
        if let Some(rest) = pattern.strip_suffix('|') {
            end_anchor = true;
            pattern = rest;
        }
        if pattern.is_empty() && start == StartAnchor::None && !end_anchor {
            return None;
        }
        // Regex rules are outside the supported syntax; their `/.../` bodies
        // parse as ordinary pattern text, which practically never matches
        // literally, so they only under-block.

        let mut segments = Vec::new();
        let mut literal = String::new();
        for c in pattern.chars() {
            match c {
                '*' => {
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    if segments.last() != Some(&Segment::Wildcard) {
                        segments.push(Segment::Wildcard);
                    }
                }
                '^' => {
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    segments.push(Segment::Separator);
                }
                c => literal.extend(c.to_lowercase()),
            }
        }
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }

        Some(FilterRule {
            segments,
            start,
            end_anchor,
            options,
            source,
        })
    }

    /// Whether this rule matches the (lowercased) URL.
    fn matches(&self, url: &str, host: Option<(usize, usize)>) -> bool {
        if self.options.unsupported || self.options.not_script {
            return false;
        }
        if let Some((host_start, host_end)) = host {
            let host_str = &url[host_start..host_end];
            if !self.options.domains.is_empty()
                && !self
                    .options
                    .domains
                    .iter()
                    .any(|d| host_matches_domain(host_str, d))
            {
                return false;
            }
            if self
                .options
                .excluded_domains
                .iter()
                .any(|d| host_matches_domain(host_str, d))
            {
                return false;
            }
        } else if !self.options.domains.is_empty() {
            return false;
        }

        match self.start {
            StartAnchor::UrlStart => self.match_at(url, 0),
            StartAnchor::Domain => {
                let Some((host_start, host_end)) = host else {
                    return false;
                };
                // Candidate positions: the host start and each position
                // right after a dot inside the host.
                if self.match_at(url, host_start) {
                    return true;
                }
                url[host_start..host_end]
                    .match_indices('.')
                    .any(|(i, _)| self.match_at(url, host_start + i + 1))
            }
            StartAnchor::None => (0..=url.len()).any(|p| self.match_at(url, p)),
        }
    }

    fn match_at(&self, url: &str, pos: usize) -> bool {
        match_segments(&self.segments, url.as_bytes(), pos, self.end_anchor)
    }
}

fn match_segments(segments: &[Segment], url: &[u8], pos: usize, end_anchor: bool) -> bool {
    match segments.split_first() {
        None => !end_anchor || pos == url.len(),
        Some((Segment::Literal(lit), rest)) => {
            url[pos..].starts_with(lit.as_bytes())
                && match_segments(rest, url, pos + lit.len(), end_anchor)
        }
        Some((Segment::Separator, rest)) => {
            if pos == url.len() {
                // `^` also matches the end of the URL; whatever follows must
                // be able to match emptiness too.
                rest.iter()
                    .all(|s| matches!(s, Segment::Wildcard | Segment::Separator))
            } else {
                is_separator(url[pos]) && match_segments(rest, url, pos + 1, end_anchor)
            }
        }
        Some((Segment::Wildcard, rest)) => {
            (pos..=url.len()).any(|p| match_segments(rest, url, p, end_anchor))
        }
    }
}

fn is_separator(b: u8) -> bool {
    !(b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b'%'))
}

fn host_matches_domain(host: &str, domain: &str) -> bool {
    host == domain
        || (host.ends_with(domain) && host.as_bytes()[host.len() - domain.len() - 1] == b'.')
}

fn looks_like_options(tail: &str) -> bool {
    !tail.is_empty()
        && tail.split(',').all(|opt| {
            let opt = opt.trim_start_matches('~');
            !opt.is_empty()
                && opt
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '=' | '|' | '.' | '~' | '_'))
        })
}

fn parse_options(text: &str) -> RuleOptions {
    let mut options = RuleOptions::default();
    for opt in text.split(',') {
        let opt = opt.trim();
        if let Some(list) = opt.strip_prefix("domain=") {
            for entry in list.split('|') {
                let entry = entry.trim().to_ascii_lowercase();
                if let Some(neg) = entry.strip_prefix('~') {
                    options.excluded_domains.push(neg.to_string());
                } else if !entry.is_empty() {
                    options.domains.push(entry);
                }
            }
        } else if opt == "script" {
            // All URLs matched here are script requests.
        } else if opt == "~script" {
            options.not_script = true;
        } else {
            options.unsupported = true;
        }
    }
    options
}

/// Result of matching one URL against a list, with the deciding rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub blocked: bool,
    pub block_rule: Option<String>,
    pub exception_rule: Option<String>,
}

/// True iff any block rule matches and no exception rule does. `$domain=`
/// constraints are evaluated against the URL's own host, the only context
/// available to an offline URL-level check.
pub fn match_filters(url: &str, filters: &FilterList) -> bool {
    match_filters_explain(url, filters).blocked
}

pub fn match_filters_explain(url: &str, filters: &FilterList) -> MatchOutcome {
    let lower = url.to_ascii_lowercase();
    let host = host_span(&lower);
    let block_rule = filters
        .rules
        .iter()
        .find(|r| r.matches(&lower, host))
        .map(|r| r.source.clone());
    if block_rule.is_none() {
        return MatchOutcome {
            blocked: false,
            block_rule: None,
            exception_rule: None,
        };
    }
    let exception_rule = filters
        .exceptions
        .iter()
        .find(|r| r.matches(&lower, host))
        .map(|r| r.source.clone());
    MatchOutcome {
        blocked: exception_rule.is_none(),
        block_rule,
        exception_rule,
    }
}

/// Byte span of the host within a URL string, excluding userinfo and port.
fn host_span(url: &str) -> Option<(usize, usize)> {
    let scheme_end = url.find("://")? + 3;
    let tail = &url[scheme_end..];
    let authority_end = tail.find(['/', '?', '#']).unwrap_or(tail.len());
    let authority = &tail[..authority_end];
    let host_start = scheme_end + authority.rfind('@').map_or(0, |i| i + 1);
    let mut host_end = scheme_end + authority_end;
    if let Some(colon) = url[host_start..host_end].rfind(':') {
        if url[host_start + colon + 1..host_end]
            .bytes()
            .all(|b| b.is_ascii_digit())
        {
            host_end = host_start + colon;
        }
    }
    (host_start < host_end).then_some((host_start, host_end))
}
