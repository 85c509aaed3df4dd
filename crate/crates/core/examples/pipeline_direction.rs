//! Cross-validated accuracy of J48, CFS+J48 and CFS+AdaBoostM1(J48) on
//! synthetic soil data with injected noise attributes.
//!
//! cargo run --release --example pipeline_direction -- [separation]

use soilcast::evaluation::cross_validate;
use soilcast::pipeline::{BaseLearner, Pipeline};
use soilcast::synth::{inject_noise_attributes, synthesize_soil_dataset};

fn main() -> soilcast::Result<()> {
    let sep: f64 = std::env::args().nth(1).map_or(Ok(2.0), |s| s.parse()).expect("separation");
    let j48 = Pipeline::base(BaseLearner::j48());
    let pipelines = [
        j48.clone(),
        Pipeline::select(j48.clone()),
        Pipeline::select(Pipeline::boost(j48, 10, 1)),
    ];
    for seed in 1..=5u64 {
        let d = inject_noise_attributes(&synthesize_soil_dataset(1988, seed, sep)?, 6, seed);
        let acc: Vec<String> = pipelines
            .iter()
            .map(|p| cross_validate(&d, p, 10, seed).map(|r| format!("{}={:.2}", r.classifier, r.accuracy_percent)))
            .collect::<soilcast::Result<_>>()?;
        println!("seed {seed}: {}", acc.join("  "));
    }
    Ok(())
}
