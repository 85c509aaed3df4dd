//! NBTree: a decision tree whose splits are accepted only when they improve
//! cross-validated naive-Bayes accuracy, with naive-Bayes models at the
//! leaves.
//!
//! Numeric attributes are discretised separately at every leaf, which fits
//! local structure better than one global discretisation but costs one MDL
//! pass per attribute per fitted model.

use serde::{Deserialize, Serialize};

use crate::c45::{self, C45Params};
use crate::dataset::{stratified_fold_ids, AttributeKind, Cell, Dataset, Instance, View};
use crate::error::{Error, Result};
use crate::measures::{argmax, mdl_cut_points, CutPointSet, Sample};
use crate::tree::{partition, MissingRouting, TreeNode};

pub const LAPLACE: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeModel {
    /// The class column, or an attribute the model ignores.
    Skip,
    /// `table[class][value]` = P(value | class).
    Nominal { table: Vec<Vec<f64>> },
    /// `table[class][bin]` = P(bin | class) over the stored cut points.
    Binned { cuts: CutPointSet, table: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub class_priors: Vec<f64>,
    pub attributes: Vec<AttributeModel>,
}

impl NaiveBayesModel {
    /// Posterior computed in log space and renormalised. Missing cells
    /// contribute no evidence.
    pub fn posterior(&self, inst: &Instance) -> Result<Vec<f64>> {
        if inst.cells.len() != self.attributes.len() {
            return Err(Error::Schema(format!(
                "instance has {} cells, model expects {}",
                inst.cells.len(),
                self.attributes.len()
            )));
        }
        let mut log_p: Vec<f64> = self.class_priors.iter().map(|p| p.ln()).collect();
        for (a, (model, cell)) in self.attributes.iter().zip(&inst.cells).enumerate() {
            let column = match (model, *cell) {
                (AttributeModel::Skip, _) | (_, Cell::Missing) => continue,
                (AttributeModel::Nominal { table }, Cell::Nominal(v)) if v < table[0].len() => v,
                (AttributeModel::Binned { cuts, .. }, Cell::Numeric(x)) => cuts.bin_of(x),
                _ => {
                    return Err(Error::Schema(format!(
                        "cell {cell:?} does not fit attribute {a} of the naive Bayes model"
                    )))
                }
            };
            let table = match model {
                AttributeModel::Nominal { table } | AttributeModel::Binned { table, .. } => table,
                AttributeModel::Skip => unreachable!(),
            };
            for (lp, row) in log_p.iter_mut().zip(table) {
                *lp += row[column].ln();
            }
        }
        let max = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = log_p.iter().map(|l| (l - max).exp()).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        Ok(p)
    }
}

fn smoothed_table(counts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    counts
        .into_iter()
        .map(|row| {
            let width = row.len() as f64;
            let total: f64 = row.iter().sum();
            row.iter()
                .map(|c| (c + LAPLACE) / (total + LAPLACE * width))
                .collect()
        })
        .collect()
}

/// Laplace-smoothed naive Bayes over the rows of a view.
pub fn fit_naive_bayes(view: &View<'_>) -> Result<NaiveBayesModel> {
    let total = view.total_weight();
    if !(total > 0.0) {
        return Err(Error::invalid("naive Bayes needs positive total weight"));
    }
    let d = view.data();
    let classes = d.num_classes();
    let dist = view.class_distribution();
    let class_priors = dist
        .weights()
        .iter()
        .map(|w| (w + LAPLACE) / (total + LAPLACE * classes as f64))
        .collect();

    let attributes = (0..d.num_attributes())
        .map(|a| {
            if a == d.class_index() {
                return AttributeModel::Skip;
            }
            match d.attribute(a).kind {
                AttributeKind::Nominal => {
                    let mut counts = vec![vec![0.0; d.attribute(a).arity()]; classes];
                    for &(r, w) in view.rows() {
                        if let Cell::Nominal(v) = view.cell(r, a) {
                            counts[view.class_of(r)][v] += w;
                        }
                    }
                    AttributeModel::Nominal {
                        table: smoothed_table(counts),
                    }
                }
                AttributeKind::Numeric => {
                    let mut samples: Vec<Sample> = view
                        .rows()
                        .iter()
                        .filter_map(|&(r, w)| {
                            view.cell(r, a).as_numeric().map(|value| Sample {
                                value,
                                class: view.class_of(r),
                                weight: w,
                            })
                        })
                        .collect();
                    let cuts = CutPointSet {
                        attribute_index: a,
                        cut_points: mdl_cut_points(&mut samples, classes),
                    };
                    let mut counts = vec![vec![0.0; cuts.num_bins()]; classes];
                    for s in &samples {
                        counts[s.class][cuts.bin_of(s.value)] += s.weight;
                    }
                    AttributeModel::Binned {
                        cuts,
                        table: smoothed_table(counts),
                    }
                }
            }
        })
        .collect();
    Ok(NaiveBayesModel {
        class_priors,
        attributes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbTreeParams {
    pub utility_folds: usize,
    pub min_node_size: f64,
    pub min_relative_error_reduction: f64,
    pub seed: u64,
}

impl Default for NbTreeParams {
    fn default() -> Self {
        NbTreeParams {
            utility_folds: 5,
            min_node_size: 30.0,
            min_relative_error_reduction: 0.05,
            seed: 1,
        }
    }
}

impl NbTreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.utility_folds < 2 {
            return Err(Error::invalid("utility_folds must be at least 2"));
        }
        if !(self.min_node_size > 0.0) || !(self.min_relative_error_reduction > 0.0) {
            return Err(Error::invalid("NBTree thresholds must be positive"));
        }
        Ok(())
    }
}

fn weighted_accuracy(model: &NaiveBayesModel, view: &View<'_>) -> Result<f64> {
    let mut hit = 0.0;
    let mut total = 0.0;
    for &(r, w) in view.rows() {
        let p = model.posterior(view.data().instance(r))?;
        if argmax(&p) == view.class_of(r) {
            hit += w;
        }
        total += w;
    }
    Ok(if total > 0.0 { hit / total } else { 0.0 })
}

/// Stratified cross-validated accuracy of naive Bayes on a view. Views
/// lighter than the fold count, or with fewer rows, fall back to
/// resubstitution accuracy.
pub fn node_utility(view: &View<'_>, params: &NbTreeParams) -> Result<f64> {
    let k = params.utility_folds;
    if view.total_weight() < k as f64 || view.len() < k {
        return weighted_accuracy(&fit_naive_bayes(view)?, view);
    }
    let labels: Vec<usize> = view.rows().iter().map(|&(r, _)| view.class_of(r)).collect();
    let fold_of = stratified_fold_ids(&labels, k, params.seed);
    let mut hit = 0.0;
    let mut total = 0.0;
    for f in 0..k {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..view.len()).partition(|&p| fold_of[p] == f);
        let train = view.select(&train);
        let test = view.select(&test);
        let tw = train.total_weight();
        if !(tw > 0.0) {
            continue;
        }
        let model = fit_naive_bayes(&train)?;
        for &(r, w) in test.rows() {
            if argmax(&model.posterior(view.data().instance(r))?) == view.class_of(r) {
                hit += w;
            }
            total += w;
        }
    }
    Ok(if total > 0.0 { hit / total } else { 0.0 })
}

fn nb_leaf(view: &View<'_>) -> Result<TreeNode> {
    let dist = view.class_distribution();
    let predicted = dist.majority();
    Ok(TreeNode::Leaf {
        naive_bayes: Some(fit_naive_bayes(view)?),
        dist,
        predicted,
    })
}

pub fn induce_nbtree(d: &Dataset, params: &NbTreeParams) -> Result<TreeNode> {
    params.validate()?;
    let view = View::full(d);
    if view.is_empty() || !(view.total_weight() > 0.0) {
        return Err(Error::invalid("cannot induce an NBTree from an empty dataset"));
    }
    grow(&view, params)
}

/// Split utility: child utilities weighted by child weight.
fn split_utility(view: &View<'_>, test: &crate::tree::SplitTest, params: &NbTreeParams) -> Result<f64> {
    let total = view.total_weight();
    let (rows, _) = partition(view, test)?.fractional();
    let mut u = 0.0;
    for r in rows {
        let child = View::from_rows(view.data(), r);
        let w = child.total_weight();
        if w > 0.0 {
            u += w / total * node_utility(&child, params)?;
        }
    }
    Ok(u)
}

fn grow(view: &View<'_>, params: &NbTreeParams) -> Result<TreeNode> {
    let dist = view.class_distribution();
    if dist.total() < params.min_node_size || dist.is_pure() {
        return nb_leaf(view);
    }
    let base = node_utility(view, params)?;
    let candidates = c45::candidates(view, &C45Params::default());
    if candidates.is_empty() {
        return nb_leaf(view);
    }

    #[cfg(feature = "parallel")]
    let utilities: Vec<f64> = {
        use rayon::prelude::*;
        candidates
            .par_iter()
            .map(|c| split_utility(view, &c.test, params))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let utilities: Vec<f64> = candidates
        .iter()
        .map(|c| split_utility(view, &c.test, params))
        .collect::<Result<_>>()?;

    let best = argmax(&utilities);
    let reduction = (1.0 - base) - (1.0 - utilities[best]);
    if !(reduction > params.min_relative_error_reduction * (1.0 - base)) {
        return nb_leaf(view);
    }

    let test = candidates[best].test.clone();
    let (rows, branch_weights) = partition(view, &test)?.fractional();
    let mut children = Vec::with_capacity(rows.len());
    for (b, r) in rows.into_iter().enumerate() {
        if branch_weights[b] <= 0.0 {
            // Unseen branch: fall back to the parent's model.
            children.push(nb_leaf(view)?);
        } else {
            children.push(grow(&View::from_rows(view.data(), r), params)?);
        }
    }
    Ok(TreeNode::Internal {
        test,
        dist,
        branch_weights,
        children,
    })
}

/// Fractional descent to the leaves, naive-Bayes posterior at each leaf.
pub fn classify_nb(root: &TreeNode, inst: &Instance) -> Result<Vec<f64>> {
    root.posterior(inst, MissingRouting::Fractional)
}
