//! AdaBoost.M1 over any pipeline that accepts instance weights.
//!
//! Each round trains the base on the current weights, measures the
//! weighted error ε, and multiplies the weights of correctly classified
//! instances by β = ε / (1 − ε). Members vote with ln(1/β).

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::measures::argmax;
use crate::pipeline::{Model, Pipeline};

/// Smallest β ever recorded; caps the vote of a perfect member at ln(1e10).
pub const BETA_MIN: f64 = 1e-10;
const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub iterations: usize,
    pub base: Box<Pipeline>,
    /// Train each round on a weight-proportional bootstrap instead of
    /// passing the weights to the base learner.
    #[serde(default)]
    pub resample: bool,
    #[serde(default)]
    pub seed: u64,
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("boosting needs at least one iteration"));
        }
        self.base.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub model: Model,
    pub beta: f64,
    pub vote_weight: f64,
    /// Weighted training error of this member when it was added.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub members: Vec<Member>,
    pub num_classes: usize,
    pub requested: usize,
    pub base_name: String,
}

impl BoostedEnsemble {
    pub fn achieved(&self) -> usize {
        self.members.len()
    }

    /// Π 2√(ε(1−ε)) over the members: the training-error bound.
    pub fn error_bound(&self) -> f64 {
        self.members
            .iter()
            .map(|m| 2.0 * (m.error * (1.0 - m.error)).sqrt())
            .product()
    }
}

fn check_normalized(d: &Dataset) -> Result<()> {
    let total = d.total_weight();
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// Which labelled instances the model gets right; unlabelled rows count
/// as correct so they never carry error mass.
fn correctness(model: &Model, d: &Dataset) -> Result<Vec<bool>> {
    d.instances()
        .iter()
        .enumerate()
        .map(|(i, inst)| match d.class_of(i) {
            Some(c) => Ok(model.predict(inst)? == c),
            None => Ok(true),
        })
        .collect()
}

fn error_of(d: &Dataset, correct: &[bool]) -> f64 {
    d.instances()
        .iter()
        .zip(correct)
        .filter(|(_, &ok)| !ok)
        .map(|(inst, _)| inst.weight)
        .sum()
}

/// Total weight of misclassified instances. Weights must sum to 1.
pub fn weighted_error(model: &Model, d: &Dataset) -> Result<f64> {
    check_normalized(d)?;
    Ok(error_of(d, &correctness(model, d)?))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Reweight {
    Continue { data: Dataset, beta: f64, error: f64 },
    /// ε is 0 or at least 0.5; boosting stops.
    Halt { error: f64 },
}

fn apply_beta(d: &Dataset, correct: &[bool], beta: f64) -> Result<Dataset> {
    let scaled: Vec<f64> = d
        .instances()
        .iter()
        .zip(correct)
        .map(|(inst, &ok)| if ok { inst.weight * beta } else { inst.weight })
        .collect();
    let total: f64 = scaled.iter().sum();
    let normalized: Vec<f64> = scaled.iter().map(|w| w / total).collect();
    d.with_weights(&normalized)
}

/// One boosting update: correct instances shrink by β, then weights are
/// renormalised, which leaves exactly half the mass on the misclassified.
pub fn reweight(d: &Dataset, model: &Model) -> Result<Reweight> {
    check_normalized(d)?;
    let correct = correctness(model, d)?;
    let error = error_of(d, &correct);
    if error <= 0.0 || error >= 0.5 {
        return Ok(Reweight::Halt { error });
    }
    let beta = (error / (1.0 - error)).max(BETA_MIN);
    Ok(Reweight::Continue {
        data: apply_beta(d, &correct, beta)?,
        beta,
        error,
    })
}

fn member(model: Model, beta: f64, error: f64) -> Member {
    Member {
        model,
        beta,
        vote_weight: (1.0 / beta).ln(),
        error,
    }
}

pub fn train(d: &Dataset, params: &BoostParams) -> Result<BoostedEnsemble> {
    params.validate()?;
    let total = d.total_weight();
    if d.is_empty() || !(total > 0.0) {
        return Err(Error::invalid("cannot boost on an empty dataset"));
    }
    let n = d.len() as f64;
    let mut current = d.with_weights(&d.weights().iter().map(|w| w / total).collect::<Vec<_>>())?;
    let mut members = Vec::new();

    for t in 0..params.iterations {
        // The base sees weights on the instance-count scale so that its
        // minimum-leaf-size parameters keep their meaning.
        let training = if params.resample {
            bootstrap(&current, params.seed.wrapping_add(t as u64))?
        } else {
            current.with_weights(&current.weights().iter().map(|w| w * n).collect::<Vec<_>>())?
        };
        let model = params.base.train(&training)?;
        let correct = correctness(&model, &current)?;
        let error = error_of(&current, &correct);

        if error <= 0.0 {
            if t == 0 {
                members.push(member(model, BETA_MIN, 0.0));
            }
            break;
        }
        if error >= 0.5 {
            if t == 0 {
                // Nothing better is available; keep it with a unit vote.
                members.push(member(model, (-1.0f64).exp(), error));
            }
            break;
        }
        let beta = (error / (1.0 - error)).max(BETA_MIN);
        members.push(member(model, beta, error));
        if t + 1 < params.iterations {
            current = apply_beta(&current, &correct, beta)?;
        }
    }

    Ok(BoostedEnsemble {
        members,
        num_classes: d.num_classes(),
        requested: params.iterations,
        base_name: params.base.name(),
    })
}

/// Weight-proportional bootstrap of the same size, all weights 1.
fn bootstrap(d: &Dataset, seed: u64) -> Result<Dataset> {
    let dist = WeightedIndex::new(d.weights())
        .map_err(|e| Error::invalid(format!("cannot resample: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = (0..d.len()).map(|_| dist.sample(&mut rng)).collect();
    let drawn = d.subset(&idx);
    drawn.with_weights(&vec![1.0; idx.len()])
}

/// Weighted vote of the members' predicted classes, normalised.
pub fn predict(e: &BoostedEnsemble, inst: &crate::dataset::Instance) -> Result<Vec<f64>> {
    if e.members.is_empty() {
        return Err(Error::InvalidState("ensemble has no members".into()));
    }
    let mut scores = vec![0.0; e.num_classes];
    for m in &e.members {
        let c = argmax(&m.model.posterior(inst)?);
        scores[c] += m.vote_weight;
    }
    let total: f64 = scores.iter().sum();
    Ok(scores.iter().map(|s| s / total).collect())
}
