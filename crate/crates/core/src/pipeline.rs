//! Learner designators and the models they train.
//!
//! A [`Pipeline`] is a recipe; [`Pipeline::train`] turns it into a
//! [`Model`]. Pipelines nest, so "select then boost J48" and "boost
//! (select + J48)" are both expressible:
//!
//! ```
//! use soilcast::pipeline::{BaseLearner, Pipeline};
//! let a = Pipeline::select(Pipeline::boost(Pipeline::base(BaseLearner::j48()), 10, 1));
//! let b = Pipeline::boost(Pipeline::select(Pipeline::base(BaseLearner::j48())), 10, 1);
//! assert_eq!(a.name(), "CFS+AdaBoostM1(J48)");
//! assert_eq!(b.name(), "AdaBoostM1(CFS+J48)");
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adaboost::{self, BoostParams, BoostedEnsemble};
use crate::c45::{self, C45Params};
use crate::cart::{self, CartParams};
use crate::cfs::{self, FeatureSubset, DEFAULT_MAX_STALE};
use crate::dataset::{Dataset, Instance, View};
use crate::error::{Error, Result};
use crate::measures::argmax;
use crate::nbtree::{self, NbTreeParams};
use crate::tree::{MissingRouting, TreeNode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", content = "params", rename_all = "snake_case")]
pub enum BaseLearner {
    J48(C45Params),
    SimpleCart(CartParams),
    NbTree(NbTreeParams),
    /// Predicts the training class distribution; a sanity baseline.
    Majority,
}

impl BaseLearner {
    pub fn j48() -> Self {
        BaseLearner::J48(C45Params::default())
    }

    pub fn cart() -> Self {
        BaseLearner::SimpleCart(CartParams::default())
    }

    pub fn nbtree() -> Self {
        BaseLearner::NbTree(NbTreeParams::default())
    }

    pub fn kind(&self) -> TreeKind {
        match self {
            BaseLearner::J48(_) => TreeKind::J48,
            BaseLearner::SimpleCart(_) => TreeKind::SimpleCart,
            BaseLearner::NbTree(_) => TreeKind::NbTree,
            BaseLearner::Majority => TreeKind::Majority,
        }
    }

    /// Copy with every internal seed replaced (CART pruning folds, NBTree
    /// utility folds).
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            BaseLearner::SimpleCart(p) => BaseLearner::SimpleCart(CartParams { seed, ..p.clone() }),
            BaseLearner::NbTree(p) => BaseLearner::NbTree(NbTreeParams { seed, ..p.clone() }),
            other => other.clone(),
        }
    }

    pub fn train(&self, d: &Dataset) -> Result<Model> {
        if View::full(d).is_empty() {
            return Err(Error::invalid("no labelled instances with positive weight to train on"));
        }
        let root = match self {
            BaseLearner::J48(p) => c45::induce(d, p)?,
            BaseLearner::SimpleCart(p) => cart::select_pruned_tree(d, p)?,
            BaseLearner::NbTree(p) => nbtree::induce_nbtree(d, p)?,
            BaseLearner::Majority => TreeNode::leaf(View::full(d).class_distribution()),
        };
        Ok(Model::Tree {
            kind: self.kind(),
            root,
        })
    }
}

impl FromStr for BaseLearner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "j48" | "c45" | "c4.5" => Ok(BaseLearner::j48()),
            "cart" | "simplecart" => Ok(BaseLearner::cart()),
            "nbtree" => Ok(BaseLearner::nbtree()),
            "majority" | "zeror" => Ok(BaseLearner::Majority),
            other => Err(Error::invalid(format!(
                "unknown algorithm '{other}' (expected j48, cart, nbtree or majority)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    J48,
    SimpleCart,
    NbTree,
    Majority,
}

impl TreeKind {
    pub fn name(self) -> &'static str {
        match self {
            TreeKind::J48 => "J48",
            TreeKind::SimpleCart => "SimpleCart",
            TreeKind::NbTree => "NBTree",
            TreeKind::Majority => "Majority",
        }
    }

    /// CART sends missing values down the heavier branch; the others split
    /// them fractionally.
    pub fn routing(self) -> MissingRouting {
        match self {
            TreeKind::SimpleCart => MissingRouting::HeavierBranch,
            _ => MissingRouting::Fractional,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Pipeline {
    Base(BaseLearner),
    /// CFS selection on the training data, then `inner` on the reduced data.
    Select { max_stale: usize, inner: Box<Pipeline> },
    Boost(BoostParams),
}

impl Pipeline {
    pub fn base(learner: BaseLearner) -> Self {
        Pipeline::Base(learner)
    }

    pub fn select(inner: Pipeline) -> Self {
        Pipeline::Select {
            max_stale: DEFAULT_MAX_STALE,
            inner: Box::new(inner),
        }
    }

    pub fn boost(base: Pipeline, iterations: usize, seed: u64) -> Self {
        Pipeline::Boost(BoostParams {
            iterations,
            base: Box::new(base),
            resample: false,
            seed,
        })
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Pipeline::Base(BaseLearner::J48(p)) => p.validate(),
            Pipeline::Base(BaseLearner::SimpleCart(p)) => p.validate(),
            Pipeline::Base(BaseLearner::NbTree(p)) => p.validate(),
            Pipeline::Base(BaseLearner::Majority) => Ok(()),
            Pipeline::Select { max_stale, inner } => {
                if *max_stale == 0 {
                    return Err(Error::invalid("max_stale must be at least 1"));
                }
                inner.validate()
            }
            Pipeline::Boost(p) => p.validate(),
        }
    }

    pub fn train(&self, d: &Dataset) -> Result<Model> {
        self.validate()?;
        match self {
            Pipeline::Base(b) => b.train(d),
            Pipeline::Select { max_stale, inner } => {
                let subset = cfs::select_features(d, *max_stale)?;
                train_selected(d, subset, inner)
            }
            Pipeline::Boost(p) => Ok(Model::Boosted(adaboost::train(d, p)?)),
        }
    }
}

/// Trains `inner` on `d` reduced to `subset`.
pub fn train_selected(d: &Dataset, subset: FeatureSubset, inner: &Pipeline) -> Result<Model> {
    let kept = cfs::kept_columns(d, &subset)?;
    let reduced = cfs::filter_dataset(d, &subset)?;
    Ok(Model::Selected {
        kept,
        subset,
        inner: Box::new(inner.train(&reduced)?),
    })
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pipeline::Base(b) => f.write_str(b.kind().name()),
            Pipeline::Select { inner, .. } => write!(f, "CFS+{inner}"),
            Pipeline::Boost(p) => write!(f, "AdaBoostM1({})", p.base),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Tree {
        kind: TreeKind,
        root: TreeNode,
    },
    Selected {
        /// Columns of the full-width input fed to `inner`, class included.
        kept: Vec<usize>,
        subset: FeatureSubset,
        inner: Box<Model>,
    },
    Boosted(BoostedEnsemble),
}

impl Model {
    /// Normalised class posterior for a full-width instance.
    pub fn posterior(&self, inst: &Instance) -> Result<Vec<f64>> {
        match self {
            Model::Tree { kind, root } => root.posterior(inst, kind.routing()),
            Model::Selected { kept, inner, .. } => inner.posterior(&cfs::project_instance(inst, kept)?),
            Model::Boosted(e) => adaboost::predict(e, inst),
        }
    }

    /// Predicted class index (ties go to the lowest index).
    pub fn predict(&self, inst: &Instance) -> Result<usize> {
        Ok(argmax(&self.posterior(inst)?))
    }

    pub fn name(&self) -> String {
        match self {
            Model::Tree { kind, .. } => kind.name().to_string(),
            Model::Selected { inner, .. } => format!("CFS+{}", inner.name()),
            Model::Boosted(e) => format!("AdaBoostM1({})", e.base_name),
        }
    }

    /// Human-readable description: trees, selected subsets and boosting
    /// members.
    pub fn render(&self, d_schema: &[crate::dataset::AttributeSpec], class_index: usize) -> String {
        match self {
            Model::Tree { kind, root } => {
                format!("{}\n\n{}", kind.name(), root.render(d_schema, class_index))
            }
            Model::Selected { kept, subset, inner } => {
                let names: Vec<&str> = subset
                    .attribute_indices
                    .iter()
                    .map(|&a| d_schema[a].name.as_str())
                    .collect();
                let schema: Vec<_> = kept.iter().map(|&a| d_schema[a].clone()).collect();
                let ci = kept.iter().position(|&a| a == class_index).unwrap_or(0);
                format!(
                    "Selected attributes: {} (merit {:.4})\n\n{}",
                    if names.is_empty() { "(none)".to_string() } else { names.join(", ") },
                    subset.merit,
                    inner.render(&schema, ci)
                )
            }
            Model::Boosted(e) => {
                let mut out = format!(
                    "AdaBoostM1: {} of {} requested iterations\n",
                    e.members.len(),
                    e.requested
                );
                for (t, m) in e.members.iter().enumerate() {
                    out.push_str(&format!(
                        "\n--- member {} (error {:.4}, vote {:.4}) ---\n{}\n",
                        t + 1,
                        m.error,
                        m.vote_weight,
                        m.model.render(d_schema, class_index)
                    ));
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        let j48 = Pipeline::base(BaseLearner::j48());
        assert_eq!(j48.name(), "J48");
        assert_eq!(Pipeline::select(j48.clone()).name(), "CFS+J48");
        assert_eq!(Pipeline::base(BaseLearner::cart()).name(), "SimpleCart");
        assert_eq!(Pipeline::base(BaseLearner::nbtree()).name(), "NBTree");
    }

    #[test]
    fn parse_learner_names() {
        assert_eq!("C45".parse::<BaseLearner>().unwrap(), BaseLearner::j48());
        assert_eq!("simplecart".parse::<BaseLearner>().unwrap(), BaseLearner::cart());
        assert!("svm".parse::<BaseLearner>().is_err());
    }

    #[test]
    fn pipeline_serde_roundtrip() {
        let p = Pipeline::select(Pipeline::boost(Pipeline::base(BaseLearner::nbtree()), 7, 3));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Pipeline>(&s).unwrap(), p);
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = Pipeline::base(BaseLearner::J48(C45Params {
            confidence_factor: 0.9,
            ..C45Params::default()
        }));
        assert!(bad.validate().is_err());
        assert!(Pipeline::boost(Pipeline::base(BaseLearner::j48()), 0, 1).validate().is_err());
    }
}
