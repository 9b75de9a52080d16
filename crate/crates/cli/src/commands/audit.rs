//! `scriptwatch audit`: one-shot integrity audit of a page's cross-origin
//! scripts. Flags missing or failing integrity metadata and prints a
//! ready-to-paste attribute for unprotected scripts.

use scriptwatch_core::extract::{classify_refs, extract_script_tags};
use scriptwatch_core::fetch::{get_with_retry, HttpFetcher};
use scriptwatch_core::sri::{
    generate_integrity_attr, parse_integrity_attr, verify, HashAlgorithm, VerifyOutcome,
};
use scriptwatch_core::url::ParsedUrl;

use crate::config::RunConfig;
use crate::AppError;

pub fn run(config: &RunConfig, url: &str) -> Result<(), AppError> {
    let fetch_config = config.fetch_config();
    let fetcher = HttpFetcher::new(&fetch_config).map_err(AppError::Data)?;

    let page_url = normalize_page_url(url)?;
    let response = get_with_retry(&fetcher, &page_url, fetch_config.retries)
        .map_err(|e| AppError::Network(format!("fetching {page_url}: {e}")))?;
    if response.status != 200 {
        return Err(AppError::Network(format!(
            "fetching {page_url}: http_status({})",
            response.status
        )));
    }
    let visited = ParsedUrl::parse(&response.final_url)
        .map_err(|e| AppError::Network(format!("unusable final URL: {e}")))?;

    let tags = extract_script_tags(&response.body);
    let (refs, warnings) = classify_refs(&visited, &tags);
    for warning in &warnings {
        println!(
            "[unresolvable] src=\"{}\" at byte {} ({})",
            warning.raw_src, warning.byte_offset, warning.error
        );
    }

    let cross_origin: Vec<_> = refs.into_iter().filter(|r| r.cross_origin).collect();
    println!(
        "audit: {} ({} cross-origin scripts)",
        visited,
        cross_origin.len()
    );

    let mut findings = 0usize;
    for r in &cross_origin {
        let script_url = r.script_url.to_string();
        let integrity = r.tag.attribute("integrity");
        match integrity {
            None => {
                findings += 1;
                println!("[missing-integrity] {script_url}");
                match get_with_retry(&fetcher, &script_url, fetch_config.retries) {
                    Ok(script) if script.status == 200 => {
                        let attr = generate_integrity_attr(&script.body, HashAlgorithm::Sha384)
                            .expect("sha384 is a valid subresource-integrity algorithm");
                        println!(
                            "  suggested: integrity=\"{attr}\" crossorigin=\"anonymous\""
                        );
                    }
                    Ok(script) => println!(
                        "  (no suggestion: fetch returned http_status({}))",
                        script.status
                    ),
                    Err(class) => println!("  (no suggestion: fetch failed with {class})"),
                }
            }
            Some(value) => {
                let metadata = parse_integrity_attr(value);
                if metadata.is_empty() {
                    findings += 1;
                    println!("[invalid-integrity] {script_url} (no usable tokens in \"{value}\")");
                } else {
                    match get_with_retry(&fetcher, &script_url, fetch_config.retries) {
                        Ok(script) if script.status == 200 => {
                            match verify(&script.body, &metadata) {
                                VerifyOutcome::Pass => println!("[pass] {script_url}"),
                                VerifyOutcome::Fail => {
                                    findings += 1;
                                    println!("[verification-failed] {script_url}");
                                }
                                VerifyOutcome::NoMetadata => unreachable!("metadata is non-empty"),
                            }
                        }
                        Ok(script) => {
                            findings += 1;
                            println!(
                                "[fetch-failed] {script_url} (http_status({}))",
                                script.status
                            );
                        }
                        Err(class) => {
                            findings += 1;
                            println!("[fetch-failed] {script_url} ({class})");
                        }
                    }
                }
            }
        }
        if !r.tag.has_attribute("crossorigin") {
            findings += 1;
            println!("[missing-crossorigin] {script_url}");
        }
    }
    println!("audit: {findings} findings");
    Ok(())
}

/// Accepts bare hosts as well as full URLs; bare hosts get the http scheme
/// the way the crawler queries seeds.
fn normalize_page_url(url: &str) -> Result<String, AppError> {
    if url.contains("://") {
        ParsedUrl::parse(url)
            .map(|u| u.to_string())
            .map_err(|e| AppError::Usage(format!("bad URL `{url}`: {e}")))
    } else {
        ParsedUrl::parse(&format!("http://{url}"))
            .map(|u| u.to_string())
            .map_err(|e| AppError::Usage(format!("bad URL `{url}`: {e}")))
    }
}
