//! `scriptwatch poll`: one polling round over the pool, appended to the
//! poll log. Designed for cron-style invocation; the round index comes from
//! the log itself, so missed runs never corrupt the series.

use scriptwatch_core::fetch::HttpFetcher;
use scriptwatch_core::poll::{poll_round, PollOutcome};
use scriptwatch_core::store;

use crate::config::RunConfig;
use crate::AppError;

use super::{lock, Workspace};

pub fn run(config: &RunConfig) -> Result<(), AppError> {
    let workspace = Workspace::new(config)?;
    let _guard = lock(&workspace)?;

    let pool = store::read_pool(&workspace.pool())?;
    if pool.is_empty() {
        return Err(AppError::Data(
            "the pool is empty; nothing to poll (re-run crawl with richer seeds)".into(),
        ));
    }
    let t = store::next_round(&workspace.poll_log())?;

    let fetch_config = config.fetch_config();
    let fetcher = HttpFetcher::new(&fetch_config).map_err(AppError::Data)?;
    let records = poll_round(&pool, t, &fetcher, &fetch_config);
    store::append_poll_records(&workspace.poll_log(), &records)?;

    let ok = records
        .iter()
        .filter(|r| matches!(r.outcome, PollOutcome::Ok { .. }))
        .count();
    println!(
        "poll: round {t} complete, {ok} ok / {} failed, appended to {}",
        records.len() - ok,
        workspace.poll_log().display()
    );
    Ok(())
}
