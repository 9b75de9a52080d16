//! `scriptwatch report`: regenerate the report directory from the existing
//! pool manifest, poll log, and summaries. Outputs are byte-identical
//! across reruns over the same inputs.

use scriptwatch_core::features::FeatureVector;
use scriptwatch_core::report::{emit_report, ReportInputs};
use scriptwatch_core::store;

use crate::config::RunConfig;
use crate::AppError;

use super::{lock, resolver, Workspace};

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
    let summaries = store::read_summaries(&workspace.summaries())?;

    // Feature values are recomputed rather than re-read so the report never
    // depends on matrix round-tripping.
    let (rows, _) = super::analyze::feature_rows(config, &pool, &summaries)?;
    let features: Vec<(u32, FeatureVector)> =
        rows.into_iter().map(|(id, v, _)| (id, v)).collect();

    let suffix_resolver = resolver(config)?;
    let inputs = ReportInputs {
        pool: &pool,
        summaries: &summaries,
        features: &features,
        resolver: &suffix_resolver,
        top_k: config.top_k,
    };
    let written = emit_report(&inputs, &workspace.report_dir())?;
    println!(
        "report: {} files -> {}",
        written.len(),
        workspace.report_dir().display()
    );
    Ok(())
}
