//! AdaBoost.M1 invariants.

mod common;

use common::{random_numeric, rng};
use proptest::prelude::*;
use soilcast::adaboost::{self, reweight, weighted_error, BoostParams, Reweight};
use soilcast::c45::C45Params;
use soilcast::pipeline::{BaseLearner, Pipeline};
use soilcast::synth::synthesize_soil_dataset;
use soilcast::Dataset;

fn stumpish() -> Pipeline {
    // Heavily pruned J48 keeps members weak, so boosting runs many rounds.
    Pipeline::base(BaseLearner::J48(C45Params {
        confidence_factor: 0.01,
        min_instances_per_leaf: 20.0,
        ..C45Params::default()
    }))
}

fn normalised(d: &Dataset) -> Dataset {
    let w = vec![1.0 / d.len() as f64; d.len()];
    d.with_weights(&w).unwrap()
}

#[test]
fn training_error_respects_product_bound() {
    let mut r = rng(3);
    for case in 0..15 {
        let d = random_numeric(&mut r, 200, 3, 3, 0.15);
        for resample in [false, true] {
            let params = BoostParams { iterations: 10, base: Box::new(stumpish()), resample, seed: case };
            let e = adaboost::train(&d, &params).unwrap();
            assert!(e.achieved() >= 1 && e.achieved() <= 10);
            let wrong = (0..d.len())
                .filter(|&i| {
                    let p = adaboost::predict(&e, d.instance(i)).unwrap();
                    Some(soilcast::measures::argmax(&p)) != d.class_of(i)
                })
                .count();
            let err = wrong as f64 / d.len() as f64;
            assert!(err <= e.error_bound() + 1e-12, "case {case}: {err} > {}", e.error_bound());
            for m in &e.members {
                assert!(m.beta > 0.0 && m.beta < 1.0 && m.vote_weight > 0.0);
            }
        }
    }
}

#[test]
fn manual_rounds_keep_weights_normalised_and_half_on_errors() {
    let d = normalised(&synthesize_soil_dataset(300, 8, 1.5).unwrap());
    let mut current = d.clone();
    let mut rounds = 0;
    for _ in 0..10 {
        let n = current.len() as f64;
        let scaled = current.with_weights(&current.weights().iter().map(|w| w * n).collect::<Vec<_>>()).unwrap();
        let model = stumpish().train(&scaled).unwrap();
        let eps = weighted_error(&model, &current).unwrap();
        match reweight(&current, &model).unwrap() {
            Reweight::Continue { data, beta, error } => {
                assert_eq!(error, eps);
                assert!((beta - eps / (1.0 - eps)).abs() < 1e-15);
                let w = data.weights();
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(w.iter().all(|&x| x > 0.0));
                // The same model is now wrong on exactly half the mass.
                assert!((weighted_error(&model, &data).unwrap() - 0.5).abs() < 1e-9);
                // Misclassified instances never lose weight.
                for (i, &wi) in w.iter().enumerate() {
                    if model.predict(current.instance(i)).unwrap() != current.class_of(i).unwrap() {
                        assert!(wi >= current.instance(i).weight);
                    }
                }
                current = data;
                rounds += 1;
            }
            Reweight::Halt { .. } => break,
        }
    }
    assert!(rounds >= 3, "only {rounds} rounds");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn half_mass_identity(eps in 1e-6f64..0.4999) {
        let beta = eps / (1.0 - eps);
        prop_assert!((eps / (eps + beta * (1.0 - eps)) - 0.5).abs() < 1e-9);
    }
}

#[test]
fn unnormalised_weights_are_rejected() {
    let d = synthesize_soil_dataset(120, 1, 2.0).unwrap();
    let model = stumpish().train(&d).unwrap();
    assert!(weighted_error(&model, &d).is_err());
    assert!(reweight(&d, &model).is_err());
}

#[test]
fn boosting_is_deterministic_in_both_modes() {
    let d = synthesize_soil_dataset(240, 2, 1.5).unwrap();
    for resample in [false, true] {
        let p = BoostParams { iterations: 6, base: Box::new(stumpish()), resample, seed: 11 };
        assert_eq!(adaboost::train(&d, &p).unwrap(), adaboost::train(&d, &p).unwrap());
    }
}
