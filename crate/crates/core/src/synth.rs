//! Seeded synthetic soil-test datasets in the nine-nutrient schema with a
//! six-level fertility label.
//!
//! Every class draws each attribute from an independent Gaussian. Class
//! means move monotonically with fertility for the attributes that carry
//! signal; the step between adjacent classes is `class_separation * signal`
//! standard deviations, so overlap shrinks as the separation grows. The
//! constants below are plausible soil chemistry, not measured ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{AttributeSpec, Cell, Dataset, Instance};
use crate::error::{Error, Result};

pub const FERTILITY_LABELS: [&str; 6] = [
    "very low",
    "low",
    "moderate",
    "moderately high",
    "high",
    "very high",
];

pub const LABEL_COLUMN: &str = "label";

#[derive(Clone, Copy, Debug)]
pub struct SoilAttribute {
    pub name: &'static str,
    /// Mean of the middle of the fertility scale.
    pub center: f64,
    pub std_dev: f64,
    /// Mean step between adjacent classes, in standard deviations per unit
    /// of class separation. Zero means the attribute carries no signal.
    pub signal: f64,
    pub min: f64,
    pub max: f64,
    pub decimals: i32,
}

// Units: pH; EC dS/m; OC %; P, K, Fe, Zn, Mn, Cu ppm.
pub const SOIL_ATTRIBUTES: [SoilAttribute; 9] = [
    SoilAttribute { name: "Ph", center: 7.2, std_dev: 0.7, signal: 0.0, min: 4.0, max: 9.0, decimals: 2 },
    SoilAttribute { name: "EC", center: 0.55, std_dev: 0.35, signal: 0.0, min: 0.01, max: 4.0, decimals: 2 },
    SoilAttribute { name: "OC", center: 0.65, std_dev: 0.12, signal: 0.55, min: 0.01, max: 3.0, decimals: 3 },
    SoilAttribute { name: "P", center: 22.0, std_dev: 5.0, signal: 0.55, min: 0.5, max: 150.0, decimals: 2 },
    SoilAttribute { name: "K", center: 260.0, std_dev: 45.0, signal: 0.55, min: 20.0, max: 1200.0, decimals: 1 },
    SoilAttribute { name: "Fe", center: 8.0, std_dev: 2.5, signal: 0.2, min: 0.3, max: 60.0, decimals: 2 },
    SoilAttribute { name: "Zn", center: 0.9, std_dev: 0.3, signal: 0.2, min: 0.05, max: 10.0, decimals: 2 },
    SoilAttribute { name: "Mn", center: 9.0, std_dev: 3.0, signal: 0.0, min: 0.3, max: 60.0, decimals: 2 },
    SoilAttribute { name: "Cu", center: 1.4, std_dev: 0.5, signal: 0.0, min: 0.05, max: 10.0, decimals: 2 },
];

pub const MIN_SYNTHETIC_INSTANCES: usize = 60;
/// Class separation used by the CLI and the demo unless overridden.
pub const DEFAULT_SEPARATION: f64 = 2.0;

pub fn soil_schema() -> Vec<AttributeSpec> {
    SOIL_ATTRIBUTES
        .iter()
        .map(|a| AttributeSpec::numeric(a.name))
        .chain(std::iter::once(AttributeSpec::nominal(
            LABEL_COLUMN,
            FERTILITY_LABELS,
        )))
        .collect()
}

/// Generator means, indexed `[class][attribute]`.
pub fn class_means(class_separation: f64) -> Vec<Vec<f64>> {
    let mid = (FERTILITY_LABELS.len() as f64 - 1.0) / 2.0;
    (0..FERTILITY_LABELS.len())
        .map(|level| {
            SOIL_ATTRIBUTES
                .iter()
                .map(|a| {
                    a.center + class_separation * a.signal * a.std_dev * (level as f64 - mid)
                })
                .collect()
        })
        .collect()
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (v * scale).round() / scale
}

/// Instance `i` belongs to class `i % 6`, so class counts differ by at most
/// one and labels first appear in fertility order.
pub fn synthesize_soil_dataset(n: usize, seed: u64, class_separation: f64) -> Result<Dataset> {
    if n < MIN_SYNTHETIC_INSTANCES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SYNTHETIC_INSTANCES} instances, got {n}"
        )));
    }
    if !(class_separation > 0.0) || !class_separation.is_finite() {
        return Err(Error::invalid("class separation must be positive and finite"));
    }
    let means = class_means(class_separation);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = FERTILITY_LABELS.len();
    let instances = (0..n)
        .map(|i| {
            let class = i % classes;
            let mut cells: Vec<Cell> = SOIL_ATTRIBUTES
                .iter()
                .zip(&means[class])
                .map(|(a, &mu)| {
                    let draw = Normal::new(mu, a.std_dev)
                        .expect("positive std dev")
                        .sample(&mut rng);
                    Cell::Numeric(round_to(draw.clamp(a.min, a.max), a.decimals))
                })
                .collect();
            cells.push(Cell::Nominal(class));
            Instance::new(cells)
        })
        .collect();
    Ok(Dataset::from_parts_unchecked(
        soil_schema(),
        SOIL_ATTRIBUTES.len(),
        instances,
    ))
}

/// Adds `count` numeric columns of standard-normal noise, named
/// `noise1..`, placed just before the class column.
pub fn inject_noise_attributes(d: &Dataset, count: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e_6f69_7365);
    let class_index = d.class_index();
    let mut schema: Vec<AttributeSpec> = Vec::with_capacity(d.num_attributes() + count);
    for (i, spec) in d.schema().iter().enumerate() {
        if i == class_index {
            schema.extend((1..=count).map(|j| AttributeSpec::numeric(format!("noise{j}"))));
        }
        schema.push(spec.clone());
    }
    let instances = d
        .instances()
        .iter()
        .map(|inst| {
            let mut cells = Vec::with_capacity(inst.cells.len() + count);
            for (i, cell) in inst.cells.iter().enumerate() {
                if i == class_index {
                    for _ in 0..count {
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        cells.push(Cell::Numeric(round_to(z, 4)));
                    }
                }
                cells.push(*cell);
            }
            Instance::with_weight(cells, inst.weight)
        })
        .collect();
    Dataset::from_parts_unchecked(schema, class_index + count, instances)
}
