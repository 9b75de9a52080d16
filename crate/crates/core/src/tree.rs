//! CART decision tree and the under-sampled repeated cross-validation
//! protocol.
//!
//! Splits minimize weighted Gini impurity over midpoint thresholds between
//! consecutive distinct sorted column values; ties break toward the lowest
//! column index, then the lowest threshold, so training is deterministic.
//! All randomness (majority-class under-sampling, fold shuffling) derives
//! from a single seed through ChaCha8, making every run reproducible bit
//! for bit.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset is not rectangular: row {row} has {found} columns, expected {expected}")]
    NotRectangular {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("both classes are required, found only label {0}")]
    SingleClass(u8),
    #[error("row has {found} columns but the tree was trained on {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label values must be 0 or 1, found `{0}`")]
    BadLabel(String),
    #[error("max_depth must be at least 1")]
    BadDepth,
    #[error("bad model line {0}: `{1}`")]
    BadModelLine(usize, String),
    #[error("reading dataset: {0}")]
    Io(String),
}

/// A rectangular feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
    ) -> Result<Dataset, TreeError> {
        if rows.is_empty() || rows.len() != labels.len() {
            return Err(TreeError::EmptyDataset);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(TreeError::NotRectangular {
                    row: i,
                    found: row.len(),
                    expected: columns.len(),
                });
            }
        }
        if let Some(bad) = labels.iter().find(|l| **l > 1) {
            return Err(TreeError::BadLabel(bad.to_string()));
        }
        Ok(Dataset {
            columns,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// (count of label 0, count of label 1).
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|l| **l == 1).count();
        (self.labels.len() - ones, ones)
    }

    /// Reads a delimited matrix with a header row; the `label` column holds
    /// 0/1, every other column is a feature.
    pub fn from_csv(path: &Path) -> Result<Dataset, TreeError> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| TreeError::Io(format!("{}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| TreeError::Io(e.to_string()))?
            .clone();
        let label_idx = headers
            .iter()
            .position(|h| h == "label")
            .ok_or_else(|| TreeError::Io(format!("{}: no `label` column", path.display())))?;
        let columns: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, h)| h.to_string())
            .collect();

        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| TreeError::Io(e.to_string()))?;
            let mut row = Vec::with_capacity(columns.len());
            for (i, cell) in record.iter().enumerate() {
                let value: f64 = cell
                    .parse()
                    .map_err(|_| TreeError::Io(format!("bad numeric cell `{cell}`")))?;
                if i == label_idx {
                    if value == 0.0 {
                        labels.push(0);
                    } else if value == 1.0 {
                        labels.push(1);
                    } else {
                        return Err(TreeError::BadLabel(cell.to_string()));
                    }
                } else {
                    row.push(value);
                }
            }
            rows.push(row);
        }
        Dataset::new(columns, rows, labels)
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Balances the dataset by sampling the majority class uniformly without
/// replacement down to the minority size. The minority class is kept whole;
/// surviving rows stay in their original order.
pub fn undersample(dataset: &Dataset, seed: u64) -> Result<Dataset, TreeError> {
    undersample_with_rng(dataset, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn undersample_with_rng(dataset: &Dataset, rng: &mut ChaCha8Rng) -> Result<Dataset, TreeError> {
    let (zeros, ones) = dataset.class_counts();
    if zeros == 0 || ones == 0 {
        return Err(TreeError::SingleClass(if zeros == 0 { 1 } else { 0 }));
    }
    let (minority, majority): (u8, u8) = if zeros <= ones { (0, 1) } else { (1, 0) };
    let minority_size = zeros.min(ones);

    let majority_indices: Vec<usize> = (0..dataset.len())
        .filter(|&i| dataset.labels[i] == majority)
        .collect();
    let mut sampled: Vec<usize> = sample_without_replacement(&majority_indices, minority_size, rng);
    let mut keep: Vec<usize> = (0..dataset.len())
        .filter(|&i| dataset.labels[i] == minority)
        .collect();
    keep.append(&mut sampled);
    keep.sort_unstable();
    Ok(dataset.subset(&keep))
}

fn sample_without_replacement(
    population: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    // Floyd's algorithm keeps the draw count at k regardless of population
    // size, so the RNG stream stays cheap and reproducible.
    let n = population.len();
    let mut chosen = std::collections::BTreeSet::new();
    for j in (n - k)..n {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    chosen.into_iter().map(|i| population[i]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        column: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        class: u8,
        probability: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub n_columns: usize,
    pub max_depth: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub max_depth: usize,
    /// Minimum rows on each side of a split.
    pub min_leaf: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_depth: 15,
            min_leaf: 1,
        }
    }
}

/// Grows a CART tree of at most `max_depth` split levels.
pub fn train(dataset: &Dataset, max_depth: usize) -> Result<DecisionTree, TreeError> {
    train_with(
        dataset,
        TrainConfig {
            max_depth,
            ..TrainConfig::default()
        },
    )
}

pub fn train_with(dataset: &Dataset, config: TrainConfig) -> Result<DecisionTree, TreeError> {
    if dataset.is_empty() {
        return Err(TreeError::EmptyDataset);
    }
    if config.max_depth == 0 {
        return Err(TreeError::BadDepth);
    }
    let indices: Vec<usize> = (0..dataset.len()).collect();
    let root = grow(dataset, indices, 0, &config);
    Ok(DecisionTree {
        root,
        n_columns: dataset.columns.len(),
        max_depth: config.max_depth,
    })
}

fn grow(dataset: &Dataset, indices: Vec<usize>, depth: usize, config: &TrainConfig) -> Node {
    let ones = indices.iter().filter(|&&i| dataset.labels[i] == 1).count();
    let n = indices.len();
    let pure = ones == 0 || ones == n;
    if pure || depth >= config.max_depth || n < 2 * config.min_leaf {
        return leaf(n, ones);
    }
    let Some((column, threshold)) = best_split(dataset, &indices, config.min_leaf) else {
        return leaf(n, ones);
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| dataset.rows[i][column] <= threshold);
    Node::Split {
        column,
        threshold,
        left: Box::new(grow(dataset, left_idx, depth + 1, config)),
        right: Box::new(grow(dataset, right_idx, depth + 1, config)),
    }
}

fn leaf(n: usize, ones: usize) -> Node {
    let zeros = n - ones;
    // Majority class, ties toward label 0.
    let (class, majority) = if ones > zeros { (1, ones) } else { (0, zeros) };
    Node::Leaf {
        class,
        probability: if n == 0 { 1.0 } else { majority as f64 / n as f64 },
    }
}

fn gini_binary(ones: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = ones as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// The (column, threshold) pair minimizing the weighted Gini impurity of
/// the two children. Candidate thresholds are midpoints between consecutive
/// distinct sorted values; ties break toward the lowest column, then the
/// lowest threshold.
fn best_split(dataset: &Dataset, indices: &[usize], min_leaf: usize) -> Option<(usize, f64)> {
    let n = indices.len();
    let total_ones = indices.iter().filter(|&&i| dataset.labels[i] == 1).count();
    let mut best: Option<(f64, usize, f64)> = None;

    let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(n);
    for column in 0..dataset.columns.len() {
        sorted.clear();
        sorted.extend(
            indices
                .iter()
                .map(|&i| (dataset.rows[i][column], dataset.labels[i])),
        );
        sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_ones = 0usize;
        for i in 0..n - 1 {
            left_ones += usize::from(sorted[i].1);
            if sorted[i].0 == sorted[i + 1].0 {
                continue;
            }
            let left_n = i + 1;
            let right_n = n - left_n;
            if left_n < min_leaf || right_n < min_leaf {
                continue;
            }
            let weighted = (left_n as f64 * gini_binary(left_ones, left_n)
                + right_n as f64 * gini_binary(total_ones - left_ones, right_n))
                / n as f64;
            if best.map_or(true, |(b, _, _)| weighted < b) {
                let threshold = (sorted[i].0 + sorted[i + 1].0) / 2.0;
                best = Some((weighted, column, threshold));
            }
        }
    }
    best.map(|(_, column, threshold)| (column, threshold))
}

impl DecisionTree {
    /// Root-to-leaf descent; equal values take the left branch.
    pub fn predict(&self, row: &[f64]) -> Result<(u8, f64), TreeError> {
        if row.len() != self.n_columns {
            return Err(TreeError::DimensionMismatch {
                expected: self.n_columns,
                found: row.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class, probability } => return Ok((*class, *probability)),
                Node::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*column] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Actual depth in split levels; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        fn depth_of(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + depth_of(left).max(depth_of(right)),
            }
        }
        depth_of(&self.root)
    }

    /// Textual dump: preorder, one node per line.
    pub fn dump(&self) -> String {
        fn walk(node: &Node, depth: usize, out: &mut String) {
            match node {
                Node::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => {
                    writeln!(out, "{depth} split {column} {threshold}").unwrap();
                    walk(left, depth + 1, out);
                    walk(right, depth + 1, out);
                }
                Node::Leaf { class, probability } => {
                    writeln!(out, "{depth} leaf {class} {probability}").unwrap();
                }
            }
        }
        let mut out = format!("columns {} max_depth {}\n", self.n_columns, self.max_depth);
        walk(&self.root, 0, &mut out);
        out
    }

    pub fn parse(text: &str) -> Result<DecisionTree, TreeError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| TreeError::BadModelLine(0, String::new()))?;
        let header_parts: Vec<&str> = header.split_whitespace().collect();
        let (n_columns, max_depth) = match header_parts.as_slice() {
            ["columns", c, "max_depth", d] => (
                c.parse()
                    .map_err(|_| TreeError::BadModelLine(1, header.into()))?,
                d.parse()
                    .map_err(|_| TreeError::BadModelLine(1, header.into()))?,
            ),
            _ => return Err(TreeError::BadModelLine(1, header.into())),
        };

        fn parse_node<'a, I: Iterator<Item = (usize, &'a str)>>(
            lines: &mut I,
            expected_depth: usize,
        ) -> Result<Node, TreeError> {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| TreeError::BadModelLine(0, "missing node".into()))?;
            let bad = || TreeError::BadModelLine(idx + 1, line.to_string());
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                [d, "split", column, threshold] => {
                    if d.parse::<usize>().map_err(|_| bad())? != expected_depth {
                        return Err(bad());
                    }
                    Ok(Node::Split {
                        column: column.parse().map_err(|_| bad())?,
                        threshold: threshold.parse().map_err(|_| bad())?,
                        left: Box::new(parse_node(lines, expected_depth + 1)?),
                        right: Box::new(parse_node(lines, expected_depth + 1)?),
                    })
                }
                [d, "leaf", class, probability] => {
                    if d.parse::<usize>().map_err(|_| bad())? != expected_depth {
                        return Err(bad());
                    }
                    Ok(Node::Leaf {
                        class: class.parse().map_err(|_| bad())?,
                        probability: probability.parse().map_err(|_| bad())?,
                    })
                }
                _ => Err(bad()),
            }
        }

        let root = parse_node(&mut lines, 0)?;
        Ok(DecisionTree {
            root,
            n_columns,
            max_depth,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub repetitions: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            repetitions: 100,
            max_depth: 15,
            min_leaf: 1,
            seed: 1,
        }
    }
}

/// Metrics for one held-out fold. Precision and recall stay undefined when
/// their denominators are empty (a single-class fold, or no positive
/// predictions); accuracy is always recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub repetition: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
    /// Folds with the metric defined.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub config: CvConfig,
    pub accuracy: MetricStats,
    pub precision: MetricStats,
    pub recall: MetricStats,
    pub f1: MetricStats,
    pub folds: Vec<FoldMetrics>,
}

/// The full protocol: for each repetition, under-sample with `seed + r`,
/// shuffle, split into near-equal disjoint folds, train on the remainder,
/// and score the held-out fold. Repetitions are independent and run in
/// parallel; the report is aggregated in repetition order, so a fixed seed
/// reproduces it exactly.
pub fn cross_validate(dataset: &Dataset, config: &CvConfig) -> Result<CvReport, TreeError> {
    if config.folds < 2 {
        return Err(TreeError::Io("folds must be at least 2".into()));
    }
    let train_config = TrainConfig {
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
    };
    let per_rep: Vec<Result<Vec<FoldMetrics>, TreeError>> = (0..config.repetitions)
        .into_par_iter()
        .map(|repetition| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(repetition as u64));
            let sampled = undersample_with_rng(dataset, &mut rng)?;
            let mut order: Vec<usize> = (0..sampled.len()).collect();
            order.shuffle(&mut rng);

            let folds = partition_folds(&order, config.folds);
            let mut metrics = Vec::with_capacity(config.folds);
            for (fold_idx, fold) in folds.iter().enumerate() {
                let train_indices: Vec<usize> = folds
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != fold_idx)
                    .flat_map(|(_, f)| f.iter().copied())
                    .collect();
                let tree = train_with(&sampled.subset(&train_indices), train_config)?;
                assert!(
                    tree.depth() <= config.max_depth,
                    "grown tree exceeds max_depth"
                );
                metrics.push(score_fold(&sampled, fold, &tree, repetition, fold_idx)?);
            }
            Ok(metrics)
        })
        .collect();

    let mut folds = Vec::with_capacity(config.repetitions * config.folds);
    for rep in per_rep {
        folds.extend(rep?);
    }
    Ok(CvReport {
        config: *config,
        accuracy: stats(folds.iter().map(|f| Some(f.accuracy))),
        precision: stats(folds.iter().map(|f| f.precision)),
        recall: stats(folds.iter().map(|f| f.recall)),
        f1: stats(folds.iter().map(|f| f.f1)),
        folds,
    })
}

/// Splits shuffled indices into `folds` disjoint, exhaustive chunks whose
/// sizes differ by at most one.
pub fn partition_folds(order: &[usize], folds: usize) -> Vec<Vec<usize>> {
    let n = order.len();
    let base = n / folds;
    let remainder = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for i in 0..folds {
        let size = base + usize::from(i < remainder);
        out.push(order[start..start + size].to_vec());
        start += size;
    }
    out
}

fn score_fold(
    dataset: &Dataset,
    fold: &[usize],
    tree: &DecisionTree,
    repetition: usize,
    fold_idx: usize,
) -> Result<FoldMetrics, TreeError> {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fn_ = 0usize;
    for &i in fold {
        let (predicted, _) = tree.predict(&dataset.rows[i])?;
        match (dataset.labels[i], predicted) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (0, 0) => tn += 1,
            (1, 0) => fn_ += 1,
            _ => unreachable!("labels are validated as 0/1"),
        }
    }
    let n = fold.len().max(1);
    let accuracy = (tp + tn) as f64 / n as f64;
    let precision = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
    let recall = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(FoldMetrics {
        repetition,
        fold: fold_idx,
        accuracy,
        precision,
        recall,
        f1,
    })
}

fn stats(values: impl Iterator<Item = Option<f64>>) -> MetricStats {
    let defined: Vec<f64> = values.flatten().collect();
    let n = defined.len();
    if n == 0 {
        return MetricStats {
            mean: 0.0,
            std: 0.0,
            n: 0,
        };
    }
    let mean = defined.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    MetricStats { mean, std, n }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        let columns = (0..rows[0].len()).map(|i| format!("c{i}")).collect();
        Dataset::new(columns, rows, labels).unwrap()
    }

    fn one_feature(values: &[(f64, u8)]) -> Dataset {
        dataset(
            values.iter().map(|(v, _)| vec![*v]).collect(),
            values.iter().map(|(_, l)| *l).collect(),
        )
    }

    #[test]
    fn undersample_balances_exactly() {
        let rows: Vec<Vec<f64>> = (0..140).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..140).map(|i| u8::from(i >= 100)).collect();
        let d = dataset(rows, labels);
        let balanced = undersample(&d, 7).unwrap();
        assert_eq!(balanced.class_counts(), (40, 40));
    }

    #[test]
    fn undersample_of_balanced_data_is_identity_as_multiset() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 2 == 0)).collect();
        let d = dataset(rows.clone(), labels);
        let balanced = undersample(&d, 3).unwrap();
        let mut original: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mut kept: Vec<f64> = balanced.rows.iter().map(|r| r[0]).collect();
        original.sort_by(f64::total_cmp);
        kept.sort_by(f64::total_cmp);
        assert_eq!(kept, original);
    }

    #[test]
    fn undersample_is_seed_deterministic() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..200).map(|i| u8::from(i >= 30)).collect();
        let d = dataset(rows, labels);
        let a = undersample(&d, 5).unwrap();
        let b = undersample(&d, 5).unwrap();
        assert_eq!(a, b);
        let c = undersample(&d, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn undersample_rejects_single_class() {
        let d = dataset(vec![vec![0.0], vec![1.0]], vec![0, 0]);
        assert_eq!(undersample(&d, 1), Err(TreeError::SingleClass(0)));
    }

    #[test]
    fn separable_one_feature_data_splits_at_the_midpoint() {
        let values: Vec<(f64, u8)> = (0..10)
            .map(|_| (0.0, 0))
            .chain((0..10).map(|_| (1.0, 1)))
            .collect();
        let d = one_feature(&values);
        let tree = train(&d, 1).unwrap();
        match &tree.root {
            Node::Split {
                column, threshold, ..
            } => {
                assert_eq!(*column, 0);
                assert!((threshold - 0.5).abs() < 1e-12);
            }
            other => panic!("expected a split at the root, got {other:?}"),
        }
        let correct = d
            .rows
            .iter()
            .zip(&d.labels)
            .filter(|(row, label)| tree.predict(row).unwrap().0 == **label)
            .count();
        assert_eq!(correct, d.len());
    }

    #[test]
    fn pure_data_grows_a_lone_leaf() {
        let d = dataset(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1, 1, 1]);
        let tree = train(&d, 15).unwrap();
        assert_eq!(
            tree.root,
            Node::Leaf {
                class: 1,
                probability: 1.0
            }
        );
        assert_eq!(tree.depth(), 0);
    }

    #[test]
    fn xor_needs_depth_two() {
        let d = dataset(
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ],
            vec![0, 1, 1, 0],
        );
        let accuracy = |tree: &DecisionTree| {
            d.rows
                .iter()
                .zip(&d.labels)
                .filter(|(row, label)| tree.predict(row).unwrap().0 == **label)
                .count() as f64
                / d.len() as f64
        };
        let deep = train(&d, 2).unwrap();
        assert_eq!(accuracy(&deep), 1.0);
        let shallow = train(&d, 1).unwrap();
        let a = accuracy(&shallow);
        assert!((0.5..=0.75).contains(&a), "depth-1 XOR accuracy {a}");
    }

    #[test]
    fn unrestricted_tree_memorizes_training_rows() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i * 7 % 13) as f64]).collect();
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i % 3 == 0)).collect();
        let d = dataset(rows, labels);
        let tree = train(&d, usize::MAX.min(64)).unwrap();
        for (row, label) in d.rows.iter().zip(&d.labels) {
            assert_eq!(tree.predict(row).unwrap().0, *label);
        }
    }

    #[test]
    fn boundary_values_take_the_left_branch() {
        let tree = DecisionTree {
            root: Node::Split {
                column: 0,
                threshold: 0.5,
                left: Box::new(Node::Leaf {
                    class: 0,
                    probability: 1.0,
                }),
                right: Box::new(Node::Leaf {
                    class: 1,
                    probability: 1.0,
                }),
            },
            n_columns: 1,
            max_depth: 1,
        };
        assert_eq!(tree.predict(&[0.5]).unwrap().0, 0);
        assert_eq!(tree.predict(&[0.5000001]).unwrap().0, 1);
    }

    #[test]
    fn single_leaf_tree_predicts_its_class_for_anything() {
        let tree = DecisionTree {
            root: Node::Leaf {
                class: 1,
                probability: 0.9,
            },
            n_columns: 3,
            max_depth: 15,
        };
        assert_eq!(tree.predict(&[0.0, 5.0, -1.0]).unwrap(), (1, 0.9));
    }

    #[test]
    fn predict_checks_dimensions() {
        let d = dataset(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0, 1]);
        let tree = train(&d, 2).unwrap();
        assert_eq!(
            tree.predict(&[1.0]),
            Err(TreeError::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert_eq!(
            Dataset::new(vec!["a".into()], vec![], vec![]),
            Err(TreeError::EmptyDataset)
        );
    }

    #[test]
    fn dump_and_parse_round_trip() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64).sin(), (i as f64) / 3.0])
            .collect();
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i % 2 == 0)).collect();
        let d = dataset(rows, labels);
        let tree = train(&d, 5).unwrap();
        let text = tree.dump();
        let reparsed = DecisionTree::parse(&text).unwrap();
        assert_eq!(reparsed, tree);
        assert_eq!(reparsed.dump(), text);
    }

    #[test]
    fn parse_rejects_malformed_dumps() {
        assert!(DecisionTree::parse("").is_err());
        assert!(DecisionTree::parse("columns 2 max_depth 5\n0 split 0").is_err());
        assert!(DecisionTree::parse("columns 2 max_depth 5\n1 leaf 0 1.0").is_err());
    }

    fn separable(n: usize) -> Dataset {
        // Class 0 lives in [0, 1), class 1 in [2, 3) on column 0; the other
        // column is irrelevant.
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let offset = (i % (n / 2)) as f64 / (n / 2) as f64;
                if i < n / 2 {
                    vec![offset, (i % 7) as f64]
                } else {
                    vec![2.0 + offset, (i % 5) as f64]
                }
            })
            .collect();
        let labels = (0..n).map(|i| u8::from(i >= n / 2)).collect();
        dataset(rows, labels)
    }

    #[test]
    fn cross_validate_on_separable_data_is_nearly_perfect() {
        let d = separable(200);
        let report = cross_validate(
            &d,
            &CvConfig {
                repetitions: 5,
                ..CvConfig::default()
            },
        )
        .unwrap();
        assert_eq!(report.folds.len(), 50);
        assert!(report.accuracy.mean >= 0.99, "mean {}", report.accuracy.mean);
    }

    #[test]
    fn cross_validate_is_bitwise_reproducible() {
        let d = separable(100);
        let config = CvConfig {
            repetitions: 3,
            seed: 99,
            ..CvConfig::default()
        };
        let a = cross_validate(&d, &config).unwrap();
        let b = cross_validate(&d, &config).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn fold_partition_is_disjoint_exhaustive_and_balanced() {
        let order: Vec<usize> = (0..103).collect();
        let folds = partition_folds(&order, 10);
        assert_eq!(folds.len(), 10);
        let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 103);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, order);
    }
}
