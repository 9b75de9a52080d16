//! `scriptwatch train`: the full classification protocol over the feature
//! matrix — repeated under-sampled 10-fold cross-validation — plus a final
//! tree trained on one balanced sample for inspection.

use std::io::Write;

use scriptwatch_core::tree::{cross_validate, train_with, undersample, Dataset, TrainConfig};

use crate::config::RunConfig;
use crate::AppError;

use super::{lock, require_file, Workspace};

pub fn run(config: &RunConfig) -> Result<(), AppError> {
    let workspace = Workspace::new(config)?;
    let _guard = lock(&workspace)?;

    require_file(&workspace.features())?;
    let dataset = Dataset::from_csv(&workspace.features())?;
    let (zeros, ones) = dataset.class_counts();
    if zeros == 0 || ones == 0 {
        return Err(AppError::Data(format!(
            "training needs both classes, found {ones} changed and {zeros} intact scripts; \
             poll longer or over more varied seeds"
        )));
    }

    let cv_config = config.cv_config();
    let report = cross_validate(&dataset, &cv_config)?;

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| AppError::Data(e.to_string()))?;
    std::fs::write(workspace.cv_report(), json).map_err(|e| AppError::Data(e.to_string()))?;

    let mut folds_csv = std::fs::File::create(workspace.cv_folds())
        .map_err(|e| AppError::Data(e.to_string()))?;
    writeln!(folds_csv, "repetition,fold,accuracy,precision,recall,f1")
        .map_err(|e| AppError::Data(e.to_string()))?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
    for fold in &report.folds {
        writeln!(
            folds_csv,
            "{},{},{},{},{},{}",
            fold.repetition,
            fold.fold,
            fold.accuracy,
            cell(fold.precision),
            cell(fold.recall),
            cell(fold.f1)
        )
        .map_err(|e| AppError::Data(e.to_string()))?;
    }

    let balanced = undersample(&dataset, cv_config.seed)?;
    let tree = train_with(
        &balanced,
        TrainConfig {
            max_depth: cv_config.max_depth,
            min_leaf: cv_config.min_leaf,
        },
    )?;
    std::fs::write(workspace.model(), tree.dump())
        .map_err(|e| AppError::Data(e.to_string()))?;

    println!(
        "train: {} folds x {} repetitions, accuracy {:.3} +/- {:.3}, precision {:.3}, recall {:.3}, f1 {:.3}",
        cv_config.folds,
        cv_config.repetitions,
        report.accuracy.mean,
        report.accuracy.std,
        report.precision.mean,
        report.recall.mean,
        report.f1.mean
    );
    println!(
        "wrote {}, {}, {}",
        workspace.cv_report().display(),
        workspace.cv_folds().display(),
        workspace.model().display()
    );
    Ok(())
}
