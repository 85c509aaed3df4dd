#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soilcast::{AttributeSpec, Cell, Dataset, Instance};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn class_names(k: usize) -> Vec<String> {
    (0..k).map(|c| format!("c{c}")).collect()
}

/// Binary nominal attributes x0.., class `y` last.
pub fn binary_dataset(rows: &[(Vec<usize>, usize)], width: usize, classes: usize) -> Dataset {
    let mut schema: Vec<AttributeSpec> = (0..width)
        .map(|i| AttributeSpec::nominal(format!("x{i}"), ["0", "1"]))
        .collect();
    schema.push(AttributeSpec::nominal("y", class_names(classes)));
    let inst = rows
        .iter()
        .map(|(x, y)| {
            let mut cells: Vec<Cell> = x.iter().map(|&v| Cell::Nominal(v)).collect();
            cells.push(Cell::Nominal(*y));
            Instance::new(cells)
        })
        .collect();
    Dataset::new(schema, width, inst).unwrap()
}

/// Numeric attributes drawn from a small integer grid (so ties occur),
/// labels from a noisy linear rule.
pub fn random_numeric(rng: &mut impl Rng, n: usize, width: usize, classes: usize, noise: f64) -> Dataset {
    let mut schema: Vec<AttributeSpec> = (0..width).map(|i| AttributeSpec::numeric(format!("x{i}"))).collect();
    schema.push(AttributeSpec::nominal("y", class_names(classes)));
    let inst = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..width).map(|_| rng.random_range(0..20) as f64).collect();
            let score: f64 = x.iter().enumerate().map(|(i, v)| v * (i as f64 + 1.0)).sum::<f64>();
            let scale = 20.0 * (width * (width + 1) / 2) as f64;
            let mut y = ((score / scale) * classes as f64) as usize;
            if rng.random::<f64>() < noise {
                y = rng.random_range(0..classes);
            }
            let mut cells: Vec<Cell> = x.into_iter().map(Cell::Numeric).collect();
            cells.push(Cell::Nominal(y.min(classes - 1)));
            Instance::new(cells)
        })
        .collect();
    Dataset::new(schema, width, inst).unwrap()
}

/// Like [`random_numeric`] but with a fraction of feature cells missing.
pub fn with_missing(d: &Dataset, rng: &mut impl Rng, rate: f64) -> Dataset {
    let inst = d
        .instances()
        .iter()
        .map(|inst| {
            let cells = inst
                .cells
                .iter()
                .enumerate()
                .map(|(a, &c)| if a != d.class_index() && rng.random::<f64>() < rate { Cell::Missing } else { c })
                .collect();
            Instance::with_weight(cells, inst.weight)
        })
        .collect();
    Dataset::new(d.schema().to_vec(), d.class_index(), inst).unwrap()
}

pub fn training_accuracy(d: &Dataset, predict: impl Fn(&Instance) -> usize) -> f64 {
    let hits = (0..d.len()).filter(|&i| Some(predict(d.instance(i))) == d.class_of(i)).count();
    hits as f64 / d.len() as f64
}
