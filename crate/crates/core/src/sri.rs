//! Subresource-integrity metadata and content digests.
//!
//! SHA-1 exists here for the measurement path only (cheap change detection
//! over poll rounds); it is not a valid subresource-integrity algorithm and
//! both generation and parsing reject it for that purpose.

use std::fmt;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha1::Sha1;
use sha2::{Sha256, Sha384, Sha512};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashAlgorithm {
    Sha1,
    Sha256,
    Sha384,
    Sha512,
}

impl HashAlgorithm {
    pub fn digest_len(self) -> usize {
        match self {
            HashAlgorithm::Sha1 => 20,
            HashAlgorithm::Sha256 => 32,
            HashAlgorithm::Sha384 => 48,
            HashAlgorithm::Sha512 => 64,
        }
    }

    /// The attribute prefix, e.g. `sha256`.
    pub fn token(self) -> &'static str {
        match self {
            HashAlgorithm::Sha1 => "sha1",
            HashAlgorithm::Sha256 => "sha256",
            HashAlgorithm::Sha384 => "sha384",
            HashAlgorithm::Sha512 => "sha512",
        }
    }

    fn from_token(token: &str) -> Option<HashAlgorithm> {
        match token {
            "sha256" => Some(HashAlgorithm::Sha256),
            "sha384" => Some(HashAlgorithm::Sha384),
            "sha512" => Some(HashAlgorithm::Sha512),
            _ => None,
        }
    }

    pub fn is_sri(self) -> bool {
        self != HashAlgorithm::Sha1
    }
}

impl fmt::Display for HashAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A message digest. Compared as raw bytes, never as re-encoded text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Digest {
    pub algorithm: HashAlgorithm,
    pub bytes: Vec<u8>,
}

impl Digest {
    pub fn hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn base64(&self) -> String {
        BASE64.encode(&self.bytes)
    }

    pub fn from_hex(algorithm: HashAlgorithm, s: &str) -> Result<Digest, SriError> {
        let bytes = hex::decode(s).map_err(|_| SriError::BadHexDigest(s.to_string()))?;
        if bytes.len() != algorithm.digest_len() {
            return Err(SriError::BadHexDigest(s.to_string()));
        }
        Ok(Digest { algorithm, bytes })
    }
}

/// One parsed token of an `integrity` attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrityMetadata {
    pub algorithm: HashAlgorithm,
    pub digest: Vec<u8>,
    /// Trailing `?option` text, parsed and ignored.
    pub options: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyOutcome {
    Pass,
    Fail,
    NoMetadata,
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum SriError {
    #[error("{0} is not a subresource-integrity algorithm")]
    NotAnSriAlgorithm(HashAlgorithm),
    #[error("bad hex digest `{0}`")]
    BadHexDigest(String),
}

/// Hashes raw content bytes.
pub fn compute_digest(content: &[u8], algorithm: HashAlgorithm) -> Digest {
    use sha1::Digest as _;
    let bytes = match algorithm {
        HashAlgorithm::Sha1 => Sha1::digest(content).to_vec(),
        HashAlgorithm::Sha256 => Sha256::digest(content).to_vec(),
        HashAlgorithm::Sha384 => Sha384::digest(content).to_vec(),
        HashAlgorithm::Sha512 => Sha512::digest(content).to_vec(),
    };
    Digest { algorithm, bytes }
}

/// Parses an `integrity` attribute value. Tokens with unknown algorithm
/// prefixes or undecodable digests are skipped, never fatal, matching the
/// standard's forward-compatibility posture. Zero valid tokens yield an
/// empty list; the caller decides how severe that is.
pub fn parse_integrity_attr(value: &str) -> Vec<IntegrityMetadata> {
    value
        .split_ascii_whitespace()
        .filter_map(|token| {
            let (prefix, rest) = token.split_once('-')?;
            let algorithm = HashAlgorithm::from_token(prefix)?;
            let (b64, options) = match rest.split_once('?') {
                Some((d, o)) => (d, Some(o.to_string())),
                None => (rest, None),
            };
            let digest = decode_b64_digest(b64)?;
            if digest.len() != algorithm.digest_len() {
                return None;
            }
            Some(IntegrityMetadata {
                algorithm,
                digest,
                options,
            })
        })
        .collect()
}

/// The attribute grammar tolerates both the standard and the URL-safe
/// base64 alphabets; normalize to standard before decoding.
fn decode_b64_digest(b64: &str) -> Option<Vec<u8>> {
    let normalized: String = b64
        .chars()
        .map(|c| match c {
            '-' => '+',
            '_' => '/',
            other => other,
        })
        .collect();
    let unpadded = normalized.trim_end_matches('=');
    let pad = match unpadded.len() % 4 {
        0 => 0,
        2 => 2,
        3 => 1,
        _ => return None,
    };
    let mut repadded = unpadded.to_string();
    repadded.extend(std::iter::repeat('=').take(pad));
    BASE64.decode(repadded.as_bytes()).ok()
}

/// Verifies content against parsed integrity metadata: restrict to the
/// strongest algorithm present (sha512 > sha384 > sha256) and pass iff any
/// entry of that strength matches the computed digest.
pub fn verify(content: &[u8], metadata: &[IntegrityMetadata]) -> VerifyOutcome {
    let Some(strongest) = metadata.iter().map(|m| m.algorithm).max() else {
        return VerifyOutcome::NoMetadata;
    };
    let computed = compute_digest(content, strongest);
    let pass = metadata
        .iter()
        .filter(|m| m.algorithm == strongest)
        .any(|m| m.digest == computed.bytes);
    if pass {
        VerifyOutcome::Pass
    } else {
        VerifyOutcome::Fail
    }
}

/// Renders an `integrity` attribute value for the given content.
pub fn generate_integrity_attr(
    content: &[u8],
    algorithm: HashAlgorithm,
) -> Result<String, SriError> {
    if !algorithm.is_sri() {
        return Err(SriError::NotAnSriAlgorithm(algorithm));
    }
    let digest = compute_digest(content, algorithm);
    Ok(format!("{}-{}", algorithm.token(), digest.base64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Published test vectors, frozen as the digest oracle.
    const SHA1_EMPTY: &str = "da39a3ee5e6b4b0d3255bfef95601890afd80709";
    const SHA1_ABC: &str = "a9993e364706816aba3e25717850c26c9cd0d89d";
    const SHA256_EMPTY: &str = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
    const SHA256_EMPTY_B64: &str = "47DEQpj8HBSa+/TImW+5JCeuQeRkm5NMpJWZG3hSuFU=";
    const SHA256_ABC: &str = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";
    const SHA384_ABC: &str =
        "cb00753f45a35e8bb5a03d699ac65007272c32ab0eded1631a8b605a43ff5bed8086072ba1e7cc2358baeca134c825a7";
    const SHA512_ABC: &str =
        "ddaf35a193617abacc417349ae20413112e6fa4e89a97ea20a9eeee64b55d39a2192992a274fc1a836ba3c23a3feebbd454d4423643ce80e2a9ac94fa54ca49f";

    #[test]
    fn digests_match_published_vectors() {
        let cases = [
            (HashAlgorithm::Sha1, &b""[..], SHA1_EMPTY),
            (HashAlgorithm::Sha1, b"abc", SHA1_ABC),
            (HashAlgorithm::Sha256, b"", SHA256_EMPTY),
            (HashAlgorithm::Sha256, b"abc", SHA256_ABC),
            (HashAlgorithm::Sha384, b"abc", SHA384_ABC),
            (HashAlgorithm::Sha512, b"abc", SHA512_ABC),
        ];
        for (algorithm, content, expected) in cases {
            let d = compute_digest(content, algorithm);
            assert_eq!(d.hex(), expected, "{algorithm} vector");
            assert_eq!(d.bytes.len(), algorithm.digest_len());
        }
    }

    #[test]
    fn digest_is_deterministic() {
        let a = compute_digest(b"same input", HashAlgorithm::Sha1);
        let b = compute_digest(b"same input", HashAlgorithm::Sha1);
        assert_eq!(a, b);
    }

    #[test]
    fn generate_empty_content_sha256() {
        assert_eq!(
            generate_integrity_attr(b"", HashAlgorithm::Sha256).unwrap(),
            format!("sha256-{SHA256_EMPTY_B64}")
        );
    }

    #[test]
    fn generate_rejects_sha1() {
        assert_eq!(
            generate_integrity_attr(b"x", HashAlgorithm::Sha1),
            Err(SriError::NotAnSriAlgorithm(HashAlgorithm::Sha1))
        );
    }

    #[test]
    fn parse_single_valid_token() {
        let attr = format!("sha256-{SHA256_EMPTY_B64}");
        let parsed = parse_integrity_attr(&attr);
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].algorithm, HashAlgorithm::Sha256);
        assert_eq!(hex::encode(&parsed[0].digest), SHA256_EMPTY);
    }

    #[test]
    fn parse_skips_unknown_algorithms() {
        let attr = format!("sha999-AAAA sha256-{SHA256_EMPTY_B64}");
        let parsed = parse_integrity_attr(&attr);
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].algorithm, HashAlgorithm::Sha256);
        // sha1 is not an SRI algorithm either.
        assert!(parse_integrity_attr(&format!("sha1-{}", BASE64.encode([0u8; 20]))).is_empty());
    }

    #[test]
    fn parse_skips_wrong_length_digests() {
        assert!(parse_integrity_attr("sha256-AAAA").is_empty());
    }

    #[test]
    fn parse_empty_attribute() {
        assert!(parse_integrity_attr("").is_empty());
        assert!(parse_integrity_attr("   ").is_empty());
    }

    #[test]
    fn parse_keeps_options() {
        let attr = format!("sha256-{SHA256_EMPTY_B64}?foo=bar");
        let parsed = parse_integrity_attr(&attr);
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].options.as_deref(), Some("foo=bar"));
    }

    fn meta(content: &[u8], algorithm: HashAlgorithm) -> IntegrityMetadata {
        IntegrityMetadata {
            algorithm,
            digest: compute_digest(content, algorithm).bytes,
            options: None,
        }
    }

    #[test]
    fn verify_strength_filtering_truth_table() {
        use HashAlgorithm::*;
        use VerifyOutcome::*;
        let c = b"the protected content".as_slice();
        let w = b"something else".as_slice();
        let cases: [(&str, Vec<IntegrityMetadata>, VerifyOutcome); 8] = [
            ("single matching sha256", vec![meta(c, Sha256)], Pass),
            ("single mismatching sha256", vec![meta(w, Sha256)], Fail),
            ("no metadata", vec![], NoMetadata),
            (
                "wrong sha256 ignored when sha512 matches",
                vec![meta(w, Sha256), meta(c, Sha512)],
                Pass,
            ),
            (
                "right sha256 ignored when sha512 mismatches",
                vec![meta(c, Sha256), meta(w, Sha512)],
                Fail,
            ),
            (
                "any-match within the strongest set",
                vec![meta(w, Sha512), meta(c, Sha512)],
                Pass,
            ),
            (
                "weaker matches lose to strongest mismatch",
                vec![meta(c, Sha256), meta(c, Sha384), meta(w, Sha512)],
                Fail,
            ),
            (
                "sha384 strongest and matching",
                vec![meta(c, Sha384), meta(w, Sha256)],
                Pass,
            ),
        ];
        for (name, metadata, expected) in cases {
            assert_eq!(verify(c, &metadata), expected, "{name}");
        }
    }

    #[test]
    fn generate_parse_verify_round_trip() {
        for algorithm in [
            HashAlgorithm::Sha256,
            HashAlgorithm::Sha384,
            HashAlgorithm::Sha512,
        ] {
            let content = b"round trip payload";
            let attr = generate_integrity_attr(content, algorithm).unwrap();
            let parsed = parse_integrity_attr(&attr);
            assert_eq!(parsed.len(), 1);
            assert_eq!(verify(content, &parsed), VerifyOutcome::Pass);
        }
    }
}
