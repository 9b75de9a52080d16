//! `scriptwatch crawl`: query each seed domain over http, follow redirects,
//! extract cross-origin script references from the final document, and
//! build the polling pool.

use std::path::Path;

use scriptwatch_core::extract::{classify_refs, extract_script_tags, ScriptRef};
use scriptwatch_core::features::psl::{is_ipv4, sld_or_host, SuffixResolver};
use scriptwatch_core::fetch::{get_with_retry, HttpFetcher};
use scriptwatch_core::poll::build_pool;
use scriptwatch_core::store;
use scriptwatch_core::url::ParsedUrl;

use crate::config::RunConfig;
use crate::AppError;

use super::{lock, resolver, Workspace};

/// One seed line normalized to the URL that gets queried.
#[derive(Debug, PartialEq, Eq)]
pub struct Seed {
    /// Registrable domain (or IPv4/host as-is when not applicable).
    pub domain: String,
    /// `http://domain[:port]/` — seeds are always queried over http.
    pub query_url: String,
}

/// Normalizes a seed line: strips any scheme and path, keeps an explicit
/// port, and collapses DNS names to their registrable domain.
pub fn normalize_seed(line: &str, resolver: &SuffixResolver) -> Option<Seed> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return None;
    }
    let (host, port) = match ParsedUrl::parse(line) {
        Ok(url) => (url.host, url.port),
        Err(_) => {
            let bare = line
                .split_once('/')
                .map(|(authority, _)| authority)
                .unwrap_or(line);
            match bare.rsplit_once(':') {
                Some((host, port)) if port.bytes().all(|b| b.is_ascii_digit()) => {
                    (host.to_ascii_lowercase(), port.parse().ok())
                }
                _ => (bare.to_ascii_lowercase(), None),
            }
        }
    };
    if host.is_empty() {
        return None;
    }
    let domain = if is_ipv4(&host) {
        host
    } else {
        sld_or_host(&host, resolver)
    };
    let authority = match port {
        Some(p) => format!("{domain}:{p}"),
        None => domain.clone(),
    };
    Some(Seed {
        domain,
        query_url: format!("http://{authority}/"),
    })
}

pub fn run(config: &RunConfig, seeds_flag: Option<&Path>) -> Result<(), AppError> {
    let seeds_path = seeds_flag
        .map(Path::to_path_buf)
        .or_else(|| config.seeds.clone())
        .ok_or_else(|| AppError::Usage("crawl requires --seeds <file> (or `seeds` in the config)".into()))?;
    let text = std::fs::read_to_string(&seeds_path)
        .map_err(|e| AppError::Data(format!("seeds file {}: {e}", seeds_path.display())))?;

    let suffix_resolver = resolver(config)?;
    let seeds: Vec<Seed> = text
        .lines()
        .filter_map(|line| normalize_seed(line, &suffix_resolver))
        .collect();
    if seeds.is_empty() {
        return Err(AppError::Data(format!(
            "seeds file {} contains no usable domains",
            seeds_path.display()
        )));
    }

    let workspace = Workspace::new(config)?;
    let _guard = lock(&workspace)?;

    let fetch_config = config.fetch_config();
    let fetcher = HttpFetcher::new(&fetch_config).map_err(AppError::Data)?;

    let mut refs: Vec<ScriptRef> = Vec::new();
    let mut reachable = 0usize;
    let mut dropped_tags = 0usize;
    for seed in &seeds {
        let response = match get_with_retry(&fetcher, &seed.query_url, fetch_config.retries) {
            Ok(response) => response,
            Err(class) => {
                eprintln!("seed {}: unreachable ({class}), skipped", seed.domain);
                continue;
            }
        };
        // The visited (post-redirect) URL is the basis for resolution and
        // origin comparison.
        let visited = match ParsedUrl::parse(&response.final_url) {
            Ok(url) => url,
            Err(e) => {
                eprintln!("seed {}: unusable final URL ({e}), skipped", seed.domain);
                continue;
            }
        };
        reachable += 1;
        let tags = extract_script_tags(&response.body);
        let (classified, warnings) = classify_refs(&visited, &tags);
        dropped_tags += warnings.len();
        refs.extend(classified.into_iter().filter(|r| r.cross_origin));
    }

    let (pool, rejections) = build_pool(&refs, &fetcher, &fetch_config, |page| {
        sld_or_host(&page.host, &suffix_resolver)
    });

    store::write_pool(&workspace.pool(), &pool)?;
    store::write_rejections(&workspace.rejections(), &rejections)?;

    println!(
        "crawl: {} seeds ({} reachable), {} cross-origin refs ({} unresolvable tags dropped)",
        seeds.len(),
        reachable,
        refs.len(),
        dropped_tags
    );
    println!(
        "pool: {} qualified entries, {} rejections -> {}",
        pool.len(),
        rejections.len(),
        workspace.pool().display()
    );
    if pool.is_empty() {
        eprintln!("warning: the pool is empty; polling will have nothing to do");
    }
    Ok(())
}
