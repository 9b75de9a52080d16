pub mod analyze;
pub mod audit;
pub mod crawl;
pub mod poll;
pub mod report;
pub mod train;

use std::path::{Path, PathBuf};

use scriptwatch_core::features::filters::FilterList;
use scriptwatch_core::features::psl::{PublicSuffixList, SuffixResolver};
use scriptwatch_core::store;

use crate::config::RunConfig;
use crate::AppError;

/// Workspace file locations for one run.
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(config: &RunConfig) -> Result<Workspace, AppError> {
        std::fs::create_dir_all(&config.workspace).map_err(|e| {
            AppError::Data(format!(
                "workspace {} is not writable: {e}",
                config.workspace.display()
            ))
        })?;
        Ok(Workspace {
            root: config.workspace.clone(),
        })
    }

    pub fn pool(&self) -> PathBuf {
        self.root.join(store::POOL_FILE)
    }

    pub fn rejections(&self) -> PathBuf {
        self.root.join(store::REJECTIONS_FILE)
    }

    pub fn poll_log(&self) -> PathBuf {
        self.root.join(store::POLL_LOG_FILE)
    }

    pub fn summaries(&self) -> PathBuf {
        self.root.join(store::SUMMARIES_FILE)
    }

    pub fn features(&self) -> PathBuf {
        self.root.join("features.csv")
    }

    pub fn features_extended(&self) -> PathBuf {
        self.root.join("features_extended.csv")
    }

    pub fn dtop_domains(&self) -> PathBuf {
        self.root.join("dtop_domains.txt")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn cv_report(&self) -> PathBuf {
        self.root.join("cv_report.json")
    }

    pub fn cv_folds(&self) -> PathBuf {
        self.root.join("cv_folds.csv")
    }

    pub fn model(&self) -> PathBuf {
        self.root.join("model.tree")
    }
}

/// The registrable-domain resolver selected by the config.
pub fn resolver(config: &RunConfig) -> Result<SuffixResolver, AppError> {
    if config.no_psl {
        return Ok(SuffixResolver::LastTwoLabels);
    }
    match &config.psl_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                AppError::Data(format!("public-suffix snapshot {}: {e}", path.display()))
            })?;
            Ok(SuffixResolver::List(PublicSuffixList::parse(&text)))
        }
        None => Ok(SuffixResolver::bundled()),
    }
}

/// The filter list selected by the config; no list means nothing is ever
/// flagged as blocked.
pub fn filter_list(config: &RunConfig) -> Result<FilterList, AppError> {
    match &config.filter_list {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                AppError::Data(format!("filter list {}: {e}", path.display()))
            })?;
            let list = FilterList::parse(&text);
            if list.skipped > 0 {
                eprintln!(
                    "note: skipped {} unusable filter-list lines (comments, cosmetic rules)",
                    list.skipped
                );
            }
            Ok(list)
        }
        None => Ok(FilterList::default()),
    }
}

/// Acquires the per-workspace lock held for the duration of a command.
pub fn lock(workspace: &Workspace) -> Result<store::LockGuard, AppError> {
    store::LockGuard::acquire(&workspace.root).map_err(AppError::from)
}

/// Missing-file store errors keep their path in the message; everything
/// else passes through.
pub fn require_file(path: &Path) -> Result<(), AppError> {
    if path.exists() {
        Ok(())
    } else {
        Err(AppError::Data(format!(
            "missing input file `{}` (run the earlier pipeline stage first)",
            path.display()
        )))
    }
}
