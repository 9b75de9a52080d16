//! Registrable-domain (second-level domain) extraction.
//!
//! Resolution prefers a public-suffix snapshot (a bundled copy ships with
//! the crate); without one, a last-two-labels heuristic applies, which is
//! wrong for multi-label suffixes like `co.uk` and should be treated as a
//! degraded mode.

use std::collections::HashMap;

use thiserror::Error;

const BUNDLED_SNAPSHOT: &str = include_str!("psl_snapshot.dat");

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum SldError {
    #[error("IPv4 hosts have no registrable domain")]
    Ipv4Host,
    #[error("`{0}` is itself a public suffix")]
    PublicSuffixOnly(String),
    #[error("empty host")]
    EmptyHost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RuleKind {
    Normal,
    Wildcard,
    Exception,
}

/// Parsed public-suffix rules.
#[derive(Debug, Clone)]
pub struct PublicSuffixList {
    rules: HashMap<String, RuleKind>,
}

impl PublicSuffixList {
    /// The snapshot bundled with the crate.
    pub fn bundled() -> PublicSuffixList {
        PublicSuffixList::parse(BUNDLED_SNAPSHOT)
    }

    /// Parses list text: one rule per line, `*.` wildcards, `!` exceptions,
    /// `//` comments. Unusable lines are ignored.
    pub fn parse(text: &str) -> PublicSuffixList {
        let mut rules = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            let (kind, rule) = if let Some(rest) = line.strip_prefix('!') {
                (RuleKind::Exception, rest)
            } else if let Some(rest) = line.strip_prefix("*.") {
                (RuleKind::Wildcard, rest)
            } else {
                (RuleKind::Normal, line)
            };
            if !rule.is_empty() {
                rules.insert(rule.to_ascii_lowercase(), kind);
            }
        }
        PublicSuffixList { rules }
    }

    /// Number of labels in the public suffix of `labels`, per the standard
    /// matching algorithm: longest match wins, exceptions shrink by one
    /// label, and an unmatched host falls back to a one-label suffix.
    fn suffix_len(&self, labels: &[&str]) -> usize {
        let mut best = 1; // the implicit `*` rule
        for start in 0..labels.len() {
            let candidate = labels[start..].join(".");
            match self.rules.get(&candidate) {
                Some(RuleKind::Exception) => {
                    // The suffix is the exception domain minus its first label.
                    return labels.len() - start - 1;
                }
                Some(RuleKind::Normal) => {
                    best = best.max(labels.len() - start);
                }
                Some(RuleKind::Wildcard) => {
                    // `*.foo` matches one extra label in front of `foo`.
                    if start > 0 {
                        best = best.max(labels.len() - start + 1);
                    } else {
                        best = best.max(labels.len() - start);
                    }
                }
                None => {}
            }
        }
        best
    }
}

/// How hosts map to registrable domains.
#[derive(Debug, Clone)]
pub enum SuffixResolver {
    List(PublicSuffixList),
    /// Degraded mode: the registrable domain is simply the last two labels.
    LastTwoLabels,
}

impl SuffixResolver {
    pub fn bundled() -> SuffixResolver {
        SuffixResolver::List(PublicSuffixList::bundled())
    }

    pub fn is_heuristic(&self) -> bool {
        matches!(self, SuffixResolver::LastTwoLabels)
    }

    /// Number of labels taken up by the public suffix.
    pub fn suffix_labels(&self, labels: &[&str]) -> usize {
        match self {
            SuffixResolver::List(list) => list.suffix_len(labels),
            SuffixResolver::LastTwoLabels => 1,
        }
    }
}

pub fn is_ipv4(host: &str) -> bool {
    let octets: Vec<&str> = host.split('.').collect();
    octets.len() == 4
        && octets.iter().all(|o| {
            !o.is_empty()
                && o.len() <= 3
                && o.bytes().all(|b| b.is_ascii_digit())
                && o.parse::<u16>().map_or(false, |v| v <= 255)
        })
}

/// The registrable domain of a fully qualified host: the label immediately
/// under the public suffix, plus the suffix.
pub fn second_level_domain(host: &str, resolver: &SuffixResolver) -> Result<String, SldError> {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    if host.is_empty() {
        return Err(SldError::EmptyHost);
    }
    if is_ipv4(&host) {
        return Err(SldError::Ipv4Host);
    }
    let labels: Vec<&str> = host.split('.').collect();
    let suffix_len = resolver.suffix_labels(&labels);
    if labels.len() <= suffix_len {
        return Err(SldError::PublicSuffixOnly(host));
    }
    Ok(labels[labels.len() - suffix_len - 1..].join("."))
}

/// Lenient variant for aggregation call sites: hosts without a registrable
/// domain (IPv4 literals, bare suffixes) aggregate under the host string
/// itself.
pub fn sld_or_host(host: &str, resolver: &SuffixResolver) -> String {
    second_level_domain(host, resolver)
        .unwrap_or_else(|_| host.trim_end_matches('.').to_ascii_lowercase())
}

/// Host labels in excess of the public suffix; zero for IPv4 hosts.
pub fn domain_count(host: &str, resolver: &SuffixResolver) -> u32 {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    if host.is_empty() || is_ipv4(&host) {
        return 0;
    }
    let labels: Vec<&str> = host.split('.').collect();
    let suffix_len = resolver.suffix_labels(&labels);
    labels.len().saturating_sub(suffix_len) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundled() -> SuffixResolver {
        SuffixResolver::bundled()
    }

    #[test]
    fn subdomains_collapse_to_the_registrable_domain() {
        let r = bundled();
        assert_eq!(
            second_level_domain("data.microsoft.com", &r).unwrap(),
            "microsoft.com"
        );
        assert_eq!(
            second_level_domain("ipv6.microsoft.com", &r).unwrap(),
            "microsoft.com"
        );
        assert_eq!(second_level_domain("example.com", &r).unwrap(), "example.com");
    }

    #[test]
    fn multi_label_suffixes_with_the_list() {
        let r = bundled();
        assert_eq!(
            second_level_domain("a.b.example.co.uk", &r).unwrap(),
            "example.co.uk"
        );
        assert_eq!(
            second_level_domain("www.example.com.au", &r).unwrap(),
            "example.com.au"
        );
    }

    #[test]
    fn heuristic_fallback_uses_last_two_labels() {
        let r = SuffixResolver::LastTwoLabels;
        assert!(r.is_heuristic());
        assert_eq!(second_level_domain("a.b.example.co.uk", &r).unwrap(), "co.uk");
        assert_eq!(second_level_domain("data.microsoft.com", &r).unwrap(), "microsoft.com");
    }

    #[test]
    fn ipv4_hosts_are_not_applicable() {
        assert_eq!(
            second_level_domain("192.168.0.1", &bundled()),
            Err(SldError::Ipv4Host)
        );
        assert!(is_ipv4("8.8.8.8"));
        assert!(!is_ipv4("1.2.3.4.5"));
        assert!(!is_ipv4("999.1.1.1"));
        assert!(!is_ipv4("a.b.c.d"));
    }

    // Cases adapted from the published list's checkPublicSuffix test file,
    // restricted to rules present in the bundled snapshot.
    #[test]
    fn public_suffix_test_vectors() {
        let r = bundled();
        let cases = [
            ("example.com", Some("example.com")),
            ("www.example.com", Some("example.com")),
            ("example.biz", Some("example.biz")),
            ("b.example.biz", Some("example.biz")),
            ("example.co.uk", Some("example.co.uk")),
            ("a.b.example.co.uk", Some("example.co.uk")),
            ("test.ac.uk", Some("test.ac.uk")),
            ("www.test.ac.uk", Some("test.ac.uk")),
            ("com", None),
            ("co.uk", None),
            ("uk", None),
            // Wildcard rule *.ck with exception !www.ck.
            ("test.ck", None),
            ("b.test.ck", Some("b.test.ck")),
            ("a.b.test.ck", Some("b.test.ck")),
            ("www.ck", Some("www.ck")),
            ("www.www.ck", Some("www.ck")),
            // Private-domain entries.
            ("blogspot.com", None),
            ("foo.blogspot.com", Some("foo.blogspot.com")),
            ("user.github.io", Some("user.github.io")),
            // Unlisted TLDs fall back to the implicit one-label suffix.
            ("example.zz", Some("example.zz")),
            ("a.example.zz", Some("example.zz")),
        ];
        for (host, expected) in cases {
            let got = second_level_domain(host, &r).ok();
            assert_eq!(got.as_deref(), expected, "host `{host}`");
        }
    }

    #[test]
    fn trailing_dot_and_case_are_normalized() {
        let r = bundled();
        assert_eq!(
            second_level_domain("WWW.Example.COM.", &r).unwrap(),
            "example.com"
        );
    }

    #[test]
    fn domain_count_excludes_the_suffix() {
        let r = bundled();
        assert_eq!(domain_count("cdn.example.com", &r), 2);
        assert_eq!(domain_count("example.com", &r), 1);
        assert_eq!(domain_count("a.b.example.co.uk", &r), 3);
        assert_eq!(domain_count("192.168.0.1", &r), 0);
        assert_eq!(domain_count("com", &r), 0);
    }

    #[test]
    fn sld_or_host_never_fails() {
        let r = bundled();
        assert_eq!(sld_or_host("10.0.0.1", &r), "10.0.0.1");
        assert_eq!(sld_or_host("co.uk", &r), "co.uk");
        assert_eq!(sld_or_host("x.example.org", &r), "example.org");
    }
}
