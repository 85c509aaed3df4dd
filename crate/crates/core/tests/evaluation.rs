//! Cross-validation harness and report rendering.

mod common;

use std::path::Path;

use soilcast::evaluation::{
    compare, cross_validate, cross_validate_with, render_comparison, render_report, reports_to_csv, reports_to_json,
    CvOptions, SelectionScope,
};
use soilcast::pipeline::{BaseLearner, Pipeline};
use soilcast::synth::{synthesize_soil_dataset, DEFAULT_SEPARATION};
use soilcast::{AttributeSpec, Cell, Dataset, Instance};

fn sixty_forty(n: usize) -> Dataset {
    let schema = vec![AttributeSpec::numeric("x"), AttributeSpec::nominal("y", ["maj", "min"])];
    let inst = (0..n)
        .map(|i| Instance::new(vec![Cell::Numeric((i * 7 % 13) as f64), Cell::Nominal(usize::from(i % 5 >= 3))]))
        .collect();
    Dataset::new(schema, 1, inst).unwrap()
}

#[test]
fn majority_baseline_matches_class_share() {
    let d = sixty_forty(200);
    let r = cross_validate(&d, &Pipeline::base(BaseLearner::Majority), 10, 3).unwrap();
    assert_eq!(r.total(), 200);
    // Stratified folds keep 60/40 in every training split, so the
    // majority is always right on exactly the majority rows.
    assert!((r.accuracy_percent - 60.0).abs() < 1e-9);
}

#[test]
fn report_invariants() {
    let d = synthesize_soil_dataset(300, 2, DEFAULT_SEPARATION).unwrap();
    for p in [BaseLearner::j48(), BaseLearner::cart(), BaseLearner::nbtree()] {
        let r = cross_validate(&d, &Pipeline::base(p), 5, 8).unwrap();
        assert_eq!(r.correctly_classified + r.incorrectly_classified, d.len());
        assert!((r.accuracy_percent - 100.0 * r.correctly_classified as f64 / d.len() as f64).abs() < 0.005);
        let counts = d.class_counts();
        for (c, row) in r.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), counts[c]);
        }
        let diagonal: usize = (0..r.confusion.len()).map(|c| r.confusion[c][c]).sum();
        assert_eq!(diagonal, r.correctly_classified);
        assert_eq!(r.fold_accuracies.len(), 5);
    }
}

#[test]
fn bad_fold_counts_are_rejected() {
    let d = sixty_forty(20);
    let p = Pipeline::base(BaseLearner::j48());
    assert!(cross_validate(&d, &p, 1, 0).is_err());
    assert!(cross_validate(&d, &p, 21, 0).is_err());
}

#[test]
fn compare_rows_are_deterministic_and_sorted() {
    let d = synthesize_soil_dataset(240, 4, DEFAULT_SEPARATION).unwrap();
    let j48 = Pipeline::base(BaseLearner::j48());
    let reports = compare(&d, &[j48.clone(), j48.clone(), Pipeline::base(BaseLearner::Majority)], 5, 1).unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[2].classifier, "Majority");
    assert!(reports.windows(2).all(|w| w[0].accuracy_percent >= w[1].accuracy_percent));
    assert!(compare(&d, &[j48], 5, 1).is_err());
}

#[test]
fn selection_scope_is_recorded() {
    let d = soilcast::synth::inject_noise_attributes(&synthesize_soil_dataset(300, 3, 2.0).unwrap(), 3, 3);
    let p = Pipeline::select(Pipeline::base(BaseLearner::j48()));
    let per_fold = cross_validate_with(&d, &p, &CvOptions { folds: 5, seed: 1, ..CvOptions::default() }).unwrap();
    assert_eq!(per_fold.fold_subsets.len(), 5);
    let global = cross_validate_with(
        &d,
        &p,
        &CvOptions { folds: 5, seed: 1, selection_scope: SelectionScope::FullDataset },
    )
    .unwrap();
    assert!(global.fold_subsets.windows(2).all(|w| w[0] == w[1]));
    assert!(render_report(&global, 4).contains("optimistic"));
}

#[test]
fn machine_readable_columns() {
    let d = sixty_forty(50);
    let r = compare(&d, &[Pipeline::base(BaseLearner::Majority), Pipeline::base(BaseLearner::j48())], 5, 1).unwrap();
    let csv = reports_to_csv(&r).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "classifier,correctly_classified,incorrectly_classified,accuracy_percent");
    assert_eq!(csv.lines().count(), 3);
    let json: serde_json::Value = serde_json::from_str(&reports_to_json(&r).unwrap()).unwrap();
    let keys: Vec<&String> = json[0].as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 4);
}

/// Three-learner comparison on the synthetic soil data. The numbers are
/// this implementation's own; regenerate with `UPDATE_GOLDEN=1`.
#[test]
fn soil_comparison_golden() {
    let d = synthesize_soil_dataset(1988, 42, DEFAULT_SEPARATION).unwrap();
    let pipelines: Vec<Pipeline> =
        [BaseLearner::j48(), BaseLearner::cart(), BaseLearner::nbtree()].into_iter().map(Pipeline::base).collect();
    let reports = compare(&d, &pipelines, 10, 1).unwrap();
    let rendered = render_comparison(&reports, 4);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/soil_1988_compare.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &rendered).unwrap();
    }
    let expected = std::fs::read_to_string(&path).expect("golden file present");
    assert_eq!(rendered, expected);
}
