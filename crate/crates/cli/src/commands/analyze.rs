//! `scriptwatch analyze`: reduce the poll log to integrity summaries, the
//! labeled feature matrix, and the report directory.

use std::io::Write;

use scriptwatch_core::features::{
    compute_features, extended_columns, including_domains, write_extended_columns,
    write_feature_matrix, FeatureVector,
};
use scriptwatch_core::integrity::{summarize, IntegritySummary};
use scriptwatch_core::poll::{HashSeries, PoolEntry};
use scriptwatch_core::report::{emit_report, rank_domains, ReportInputs};
use scriptwatch_core::store;

use crate::config::RunConfig;
use crate::AppError;

use super::{filter_list, lock, resolver, Workspace};

pub fn run(config: &RunConfig) -> Result<(), AppError> {
    let workspace = Workspace::new(config)?;
    let _guard = lock(&workspace)?;

    let pool = store::read_pool(&workspace.pool())?;
    let records = store::read_poll_log(&workspace.poll_log())?;
    if records.is_empty() {
        return Err(AppError::Data(format!(
            "poll log {} is empty; run at least one round first",
            workspace.poll_log().display()
        )));
    }

    let summaries = summarize_all(&records);
    store::write_summaries(&workspace.summaries(), &summaries)?;

    let (rows, top_domains) = feature_rows(config, &pool, &summaries)?;
    write_feature_matrix(&workspace.features(), &rows, config.top_k)?;
    let extended: Vec<_> = rows
        .iter()
        .map(|(url_id, _, _)| {
            let entry = pool.iter().find(|e| e.url_id == *url_id).expect("row from pool");
            extended_columns(entry)
        })
        .collect();
    write_extended_columns(&workspace.features_extended(), &extended)?;
    let mut dtop_file = std::fs::File::create(workspace.dtop_domains())
        .map_err(|e| AppError::Data(e.to_string()))?;
    for domain in &top_domains {
        writeln!(dtop_file, "{domain}").map_err(|e| AppError::Data(e.to_string()))?;
    }

    let suffix_resolver = resolver(config)?;
    let features: Vec<(u32, FeatureVector)> = rows
        .iter()
        .map(|(id, v, _)| (*id, v.clone()))
        .collect();
    let inputs = ReportInputs {
        pool: &pool,
        summaries: &summaries,
        features: &features,
        resolver: &suffix_resolver,
        top_k: config.top_k,
    };
    let written = emit_report(&inputs, &workspace.report_dir())?;

    let changed = summaries.iter().filter(|s| !s.intact).count();
    println!(
        "analyze: {} summaries ({} changed), feature matrix {} x {} -> {}",
        summaries.len(),
        changed,
        rows.len(),
        9 + config.top_k,
        workspace.features().display()
    );
    println!("report: {} files -> {}", written.len(), workspace.report_dir().display());
    Ok(())
}

/// Summaries for every series with at least one successful round; all-⊥
/// series are reported and skipped.
pub fn summarize_all(records: &[scriptwatch_core::poll::PollRecord]) -> Vec<IntegritySummary> {
    let mut summaries = Vec::new();
    for series in HashSeries::group(records.to_vec()) {
        match summarize(&series) {
            Ok(summary) => summaries.push(summary),
            Err(e) => eprintln!("warning: {e}; excluded from the summaries"),
        }
    }
    summaries
}

/// Labeled feature rows in summary (url_id) order, plus the top-K domains
/// backing the dtop dummies.
pub fn feature_rows(
    config: &RunConfig,
    pool: &[PoolEntry],
    summaries: &[IntegritySummary],
) -> Result<(Vec<(u32, FeatureVector, u8)>, Vec<String>), AppError> {
    let suffix_resolver = resolver(config)?;
    let filters = filter_list(config)?;
    let ranking = rank_domains(pool, config.top_k, &suffix_resolver);
    let top_domains: Vec<String> =
        ranking.by_urls.iter().map(|(d, _)| d.clone()).collect();

    let mut rows = Vec::with_capacity(summaries.len());
    for summary in summaries {
        let Some(entry) = pool.iter().find(|e| e.url_id == summary.url_id) else {
            return Err(AppError::Data(format!(
                "poll log references url_id {} that is not in the pool manifest",
                summary.url_id
            )));
        };
        let includers = including_domains(entry);
        let mut vector = compute_features(
            entry,
            &includers,
            &filters,
            &top_domains,
            &suffix_resolver,
        );
        // A sparse pool can rank fewer than K domains; pad the dummies so
        // the matrix keeps its fixed 9 + K dimension.
        vector.dtop.resize(config.top_k, 0.0);
        rows.push((summary.url_id, vector, u8::from(!summary.intact)));
    }
    Ok((rows, top_domains))
}
