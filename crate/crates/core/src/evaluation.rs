//! Stratified k-fold cross-validation and comparison reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cfs;
use crate::dataset::{stratified_k_folds, Dataset, FoldAssignment};
use crate::error::{Error, Result};
use crate::pipeline::{train_selected, Pipeline};

pub const DEFAULT_FOLDS: usize = 10;

/// Where attribute selection sees data during cross-validation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionScope {
    /// Selection runs on each training split only.
    #[default]
    PerFold,
    /// Selection runs once on all data before the folds are formed. The
    /// test folds then influence the subset, so estimates are optimistic.
    FullDataset,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub classifier: String,
    pub correctly_classified: usize,
    pub incorrectly_classified: usize,
    pub accuracy_percent: f64,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub class_labels: Vec<String>,
    pub fold_accuracies: Vec<f64>,
    pub seed: u64,
    pub folds: usize,
    pub selection_scope: SelectionScope,
    pub pipeline: Pipeline,
    /// Attribute subsets chosen per fold (selection pipelines only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fold_subsets: Vec<Vec<usize>>,
}

impl EvaluationReport {
    pub fn total(&self) -> usize {
        self.correctly_classified + self.incorrectly_classified
    }

    pub fn error_percent(&self) -> f64 {
        100.0 - self.accuracy_percent
    }
}

pub fn accuracy_from_counts(correct: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::invalid("accuracy of zero instances is undefined"));
    }
    if correct > total {
        return Err(Error::invalid(format!("{correct} correct out of {total}")));
    }
    Ok(100.0 * correct as f64 / total as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub selection_scope: SelectionScope,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            folds: DEFAULT_FOLDS,
            seed: 1,
            selection_scope: SelectionScope::PerFold,
        }
    }
}

struct FoldResult {
    /// (row, predicted class) for every labelled test row.
    predictions: Vec<(usize, usize)>,
    subset: Option<Vec<usize>>,
}

fn run_fold(
    d: &Dataset,
    pipeline: &Pipeline,
    folds: &FoldAssignment,
    fold: usize,
    global_subset: Option<&cfs::FeatureSubset>,
) -> Result<FoldResult> {
    let train = d.subset(&folds.train_indices(fold));
    let model = match (pipeline, global_subset) {
        (Pipeline::Select { inner, .. }, Some(subset)) => train_selected(&train, subset.clone(), inner)?,
        _ => pipeline.train(&train)?,
    };
    let subset = match &model {
        crate::pipeline::Model::Selected { subset, .. } => Some(subset.attribute_indices.clone()),
        _ => None,
    };
    let predictions = folds
        .test_indices(fold)
        .into_iter()
        .filter(|&i| d.class_of(i).is_some())
        .map(|i| Ok((i, model.predict(d.instance(i))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldResult { predictions, subset })
}

pub fn cross_validate(d: &Dataset, pipeline: &Pipeline, k: usize, seed: u64) -> Result<EvaluationReport> {
    cross_validate_with(
        d,
        pipeline,
        &CvOptions {
            folds: k,
            seed,
            ..CvOptions::default()
        },
    )
}

pub fn cross_validate_with(d: &Dataset, pipeline: &Pipeline, options: &CvOptions) -> Result<EvaluationReport> {
    pipeline.validate()?;
    let folds = stratified_k_folds(d, options.folds, options.seed)?;
    cross_validate_on(d, pipeline, &folds, options)
}

/// Cross-validation on a given fold assignment.
pub fn cross_validate_on(
    d: &Dataset,
    pipeline: &Pipeline,
    folds: &FoldAssignment,
    options: &CvOptions,
) -> Result<EvaluationReport> {
    let global_subset = match (pipeline, options.selection_scope) {
        (Pipeline::Select { max_stale, .. }, SelectionScope::FullDataset) => {
            Some(cfs::select_features(d, *max_stale)?)
        }
        _ => None,
    };
    let run = |f: usize| run_fold(d, pipeline, folds, f, global_subset.as_ref());
    #[cfg(feature = "parallel")]
    let results: Vec<FoldResult> = {
        use rayon::prelude::*;
        (0..folds.k).into_par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<FoldResult> = (0..folds.k).map(run).collect::<Result<_>>()?;

    let nc = d.num_classes();
    let mut confusion = vec![vec![0usize; nc]; nc];
    let mut fold_accuracies = Vec::with_capacity(folds.k);
    let mut fold_subsets = Vec::new();
    for r in &results {
        let mut hit = 0;
        for &(i, p) in &r.predictions {
            let actual = d.class_of(i).expect("only labelled rows are predicted");
            confusion[actual][p] += 1;
            hit += usize::from(actual == p);
        }
        fold_accuracies.push(if r.predictions.is_empty() {
            0.0
        } else {
            100.0 * hit as f64 / r.predictions.len() as f64
        });
        if let Some(s) = &r.subset {
            fold_subsets.push(s.clone());
        }
    }
    let correct: usize = (0..nc).map(|c| confusion[c][c]).sum();
    let total: usize = confusion.iter().flatten().sum();
    Ok(EvaluationReport {
        classifier: pipeline.name(),
        correctly_classified: correct,
        incorrectly_classified: total - correct,
        accuracy_percent: accuracy_from_counts(correct, total)?,
        confusion,
        class_labels: d.class_attribute().nominal_values.clone(),
        fold_accuracies,
        seed: options.seed,
        folds: folds.k,
        selection_scope: options.selection_scope,
        pipeline: pipeline.clone(),
        fold_subsets,
    })
}

/// Evaluates every pipeline on the same folds. Rows are sorted by accuracy
/// (descending), ties by name.
pub fn compare(d: &Dataset, pipelines: &[Pipeline], k: usize, seed: u64) -> Result<Vec<EvaluationReport>> {
    compare_with(
        d,
        pipelines,
        &CvOptions {
            folds: k,
            seed,
            ..CvOptions::default()
        },
    )
}

pub fn compare_with(d: &Dataset, pipelines: &[Pipeline], options: &CvOptions) -> Result<Vec<EvaluationReport>> {
    if pipelines.len() < 2 {
        return Err(Error::invalid("a comparison needs at least two pipelines"));
    }
    for p in pipelines {
        p.validate()?;
    }
    let folds = stratified_k_folds(d, options.folds, options.seed)?;
    let mut reports = pipelines
        .iter()
        .map(|p| cross_validate_on(d, p, &folds, options))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| {
        b.accuracy_percent
            .total_cmp(&a.accuracy_percent)
            .then_with(|| a.classifier.cmp(&b.classifier))
    });
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Rendering

const ROW_LABELS: [&str; 3] = [
    "Correctly Classified Instances",
    "Incorrectly Classified Instances",
    "Accuracy (%)",
];

/// Comparison table with one column per classifier.
pub fn render_comparison(reports: &[EvaluationReport], decimals: usize) -> String {
    let label_width = ROW_LABELS.iter().map(|l| l.len()).max().unwrap_or(0);
    let cells: Vec<[String; 3]> = reports
        .iter()
        .map(|r| {
            [
                r.correctly_classified.to_string(),
                r.incorrectly_classified.to_string(),
                format!("{:.*}", decimals, r.accuracy_percent),
            ]
        })
        .collect();
    let widths: Vec<usize> = reports
        .iter()
        .zip(&cells)
        .map(|(r, c)| c.iter().map(String::len).chain([r.classifier.len()]).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "");
    for (r, w) in reports.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", r.classifier);
    }
    out.push('\n');
    for (row, label) in ROW_LABELS.iter().enumerate() {
        let _ = write!(out, "{label:<label_width$}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", c[row]);
        }
        out.push('\n');
    }
    out
}

/// Single-classifier summary with a confusion matrix.
pub fn render_report(r: &EvaluationReport, decimals: usize) -> String {
    let total = r.total();
    let pct = |n: usize| 100.0 * n as f64 / total.max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "=== {} ({}-fold stratified cross-validation, seed {}) ===",
        r.classifier, r.folds, r.seed
    );
    let _ = writeln!(
        out,
        "Correctly Classified Instances    {:>8}  {:>10.*} %",
        r.correctly_classified,
        decimals,
        pct(r.correctly_classified)
    );
    let _ = writeln!(
        out,
        "Incorrectly Classified Instances  {:>8}  {:>10.*} %",
        r.incorrectly_classified,
        decimals,
        pct(r.incorrectly_classified)
    );
    let _ = writeln!(out, "Total Number of Instances         {total:>8}");
    if r.selection_scope == SelectionScope::FullDataset {
        let _ = writeln!(out, "(attribute selection ran on the full dataset: estimate is optimistic)");
    }
    let _ = writeln!(out, "\n=== Confusion Matrix ===");
    let w = r
        .confusion
        .iter()
        .flatten()
        .map(|n| n.to_string().len())
        .max()
        .unwrap_or(1)
        .max(2);
    let letters: Vec<String> = (0..r.class_labels.len()).map(column_letter).collect();
    for l in &letters {
        let _ = write!(out, " {l:>w$}");
    }
    out.push_str("   <-- classified as\n");
    for (i, row) in r.confusion.iter().enumerate() {
        for n in row {
            let _ = write!(out, " {n:>w$}");
        }
        let _ = writeln!(out, " | {} = {}", letters[i], r.class_labels[i]);
    }
    out
}

fn column_letter(i: usize) -> String {
    let mut s = String::new();
    let mut n = i + 1;
    while n > 0 {
        n -= 1;
        s.insert(0, (b'a' + (n % 26) as u8) as char);
        n /= 26;
    }
    s
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    classifier: &'a str,
    correctly_classified: usize,
    incorrectly_classified: usize,
    accuracy_percent: f64,
}

fn summary_rows(reports: &[EvaluationReport]) -> impl Iterator<Item = SummaryRow<'_>> {
    reports.iter().map(|r| SummaryRow {
        classifier: &r.classifier,
        correctly_classified: r.correctly_classified,
        incorrectly_classified: r.incorrectly_classified,
        accuracy_percent: r.accuracy_percent,
    })
}

pub fn reports_to_csv(reports: &[EvaluationReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in summary_rows(reports) {
        w.serialize(row)?;
    }
    if reports.is_empty() {
        w.write_record(["classifier", "correctly_classified", "incorrectly_classified", "accuracy_percent"])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn reports_to_json(reports: &[EvaluationReport]) -> Result<String> {
    let rows: Vec<SummaryRow<'_>> = summary_rows(reports).collect();
    Ok(serde_json::to_string_pretty(&rows).expect("summary rows serialise"))
}
