//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every entry point regenerates its dataset from `(n, seed, separation)`, so
//! the page holds no state beyond its form controls. Structured results are
//! returned as JSON strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use soilcast::c45::C45Params;
use soilcast::evaluation::{compare, render_comparison};
use soilcast::synth::synthesize_soil_dataset;
use soilcast::{BaseLearner, Dataset, Pipeline};

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn dataset(n: usize, seed: u64, separation: f64) -> Result<Dataset, JsValue> {
    synthesize_soil_dataset(n, seed, separation).map_err(js_err)
}

#[derive(Serialize)]
struct Scatter {
    attributes: Vec<String>,
    classes: Vec<String>,
    /// One row per instance: feature values in schema order (NaN → null).
    rows: Vec<Vec<Option<f64>>>,
    labels: Vec<usize>,
}

/// Synthetic soil samples for the scatter plot.
#[wasm_bindgen]
pub fn synth_points(n: usize, seed: u64, separation: f64) -> Result<String, JsValue> {
    let d = dataset(n, seed, separation)?;
    let features: Vec<usize> = d.feature_indices().collect();
    let scatter = Scatter {
        attributes: features.iter().map(|&a| d.attribute(a).name.clone()).collect(),
        classes: d.class_attribute().nominal_values.clone(),
        rows: (0..d.len())
            .map(|i| features.iter().map(|&a| d.numeric_value(i, a)).collect())
            .collect(),
        labels: (0..d.len()).map(|i| d.class_of(i).unwrap_or(0)).collect(),
    };
    serde_json::to_string(&scatter).map_err(js_err)
}

/// Cross-validated comparison of J48, SimpleCart and NBTree as a text table.
#[wasm_bindgen]
pub fn compare_table(n: usize, seed: u64, separation: f64, folds: usize) -> Result<String, JsValue> {
    let d = dataset(n, seed, separation)?;
    let pipelines: Vec<Pipeline> = [BaseLearner::j48(), BaseLearner::cart(), BaseLearner::nbtree()]
        .into_iter()
        .map(|b| Pipeline::base(b.with_seed(seed)))
        .collect();
    let reports = compare(&d, &pipelines, folds, seed).map_err(js_err)?;
    Ok(render_comparison(&reports, 2))
}

/// Trains a pruned J48 tree (optionally CFS-filtered and boosted) on the
/// whole dataset and renders it.
#[wasm_bindgen]
pub fn tree_text(
    n: usize,
    seed: u64,
    separation: f64,
    confidence: f64,
    select: bool,
    boost_iterations: usize,
) -> Result<String, JsValue> {
    let d = dataset(n, seed, separation)?;
    let mut p = Pipeline::base(BaseLearner::J48(C45Params {
        confidence_factor: confidence,
        ..C45Params::default()
    }));
    if boost_iterations > 0 {
        p = Pipeline::boost(p, boost_iterations, seed);
    }
    if select {
        p = Pipeline::select(p);
    }
    p.validate().map_err(js_err)?;
    let model = p.train(&d).map_err(js_err)?;
    Ok(format!("{}\n\n{}", p, model.render(d.schema(), d.class_index())))
}
