//! CART classification trees: binary Gini splits, minimal cost-complexity
//! pruning and cross-validated choice of the pruning level.

use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_k_folds, Cell, Dataset, Instance, View};
use crate::error::{Error, Result};
use crate::measures::{argmax, clearly_greater, gini_index, ClassDistribution};
use crate::tree::{partition, MissingRouting, SplitKind, SplitTest, TreeNode};

/// Decreases at or below this are treated as zero.
pub const MIN_DECREASE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartParams {
    pub min_instances_per_leaf: f64,
    pub pruning_folds: usize,
    pub use_one_se_rule: bool,
    pub seed: u64,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            min_instances_per_leaf: 2.0,
            pruning_folds: 5,
            use_one_se_rule: true,
            seed: 1,
        }
    }
}

impl CartParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_instances_per_leaf > 0.0) {
            return Err(Error::invalid("min_instances_per_leaf must be positive"));
        }
        if self.pruning_folds < 2 {
            return Err(Error::invalid("pruning_folds must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PruneSequence {
    pub alphas: Vec<f64>,
    pub trees: Vec<TreeNode>,
}

/// Gini decrease on known-valued rows, scaled by the known weight fraction.
fn decrease(
    known: &ClassDistribution,
    left: &ClassDistribution,
    right: &ClassDistribution,
    total: f64,
) -> f64 {
    let k = known.total();
    let children = (left.total() * gini_index(left.weights(), left.total())
        + right.total() * gini_index(right.weights(), right.total()))
        / k;
    k / total * (gini_index(known.weights(), k) - children)
}

/// Best (test, decrease) for one attribute.
fn attribute_best(view: &View<'_>, attribute: usize, params: &CartParams) -> Option<(SplitTest, f64)> {
    let d = view.data();
    let classes = d.num_classes();
    let total = view.total_weight();
    let min = params.min_instances_per_leaf;
    if d.attribute(attribute).is_numeric() {
        let mut known: Vec<(f64, usize, f64)> = view
            .rows()
            .iter()
            .filter_map(|&(r, w)| view.cell(r, attribute).as_numeric().map(|v| (v, view.class_of(r), w)))
            .collect();
        if known.len() < 2 {
            return None;
        }
        known.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut all = ClassDistribution::zeros(classes);
        known.iter().for_each(|&(_, c, w)| all.add(c, w));
        let mut left = ClassDistribution::zeros(classes);
        let mut right = all.clone();
        let mut best: Option<(f64, f64)> = None;
        for i in 0..known.len() - 1 {
            let (v, c, w) = known[i];
            left.add(c, w);
            right.sub(c, w);
            let next = known[i + 1].0;
            let mid = v + (next - v) / 2.0;
            if !(v < mid && mid < next) || left.total() < min || right.total() < min {
                continue;
            }
            let dec = decrease(&all, &left, &right, total);
            if best.is_none_or(|b| clearly_greater(dec, b.0)) {
                best = Some((dec, mid));
            }
        }
        best.map(|(dec, threshold)| {
            (
                SplitTest {
                    attribute,
                    kind: SplitKind::Threshold { threshold },
                },
                dec,
            )
        })
    } else {
        let arity = d.attribute(attribute).arity();
        let mut per_value = vec![ClassDistribution::zeros(classes); arity];
        let mut all = ClassDistribution::zeros(classes);
        for &(r, w) in view.rows() {
            if let Cell::Nominal(v) = view.cell(r, attribute) {
                per_value[v].add(view.class_of(r), w);
                all.add(view.class_of(r), w);
            }
        }
        if all.total() <= 0.0 {
            return None;
        }
        let mut best: Option<(f64, usize)> = None;
        for (value, left) in per_value.iter().enumerate() {
            let mut right = all.clone();
            for (c, &w) in left.weights().iter().enumerate() {
                right.sub(c, w);
            }
            if left.total() < min || right.total() < min {
                continue;
            }
            let dec = decrease(&all, left, &right, total);
            if best.is_none_or(|b| clearly_greater(dec, b.0)) {
                best = Some((dec, value));
            }
        }
        best.map(|(dec, value)| {
            (
                SplitTest {
                    attribute,
                    kind: SplitKind::NominalBinary { value },
                },
                dec,
            )
        })
    }
}

/// Binary split with the largest weighted Gini decrease; ties go to the
/// lowest attribute index, then the lowest threshold or value index.
pub fn best_binary_split(view: &View<'_>, params: &CartParams) -> Option<(SplitTest, f64)> {
    let mut best: Option<(SplitTest, f64)> = None;
    for a in view.data().feature_indices() {
        if let Some((test, dec)) = attribute_best(view, a, params) {
            if dec > MIN_DECREASE && best.as_ref().is_none_or(|b| clearly_greater(dec, b.1)) {
                best = Some((test, dec));
            }
        }
    }
    best
}

/// Grows a tree until leaves are pure or no split respects the minimum
/// leaf weight. Missing-valued rows follow the heavier branch.
pub fn grow_full(d: &Dataset, params: &CartParams) -> Result<TreeNode> {
    params.validate()?;
    let view = View::full(d);
    if view.is_empty() || !(view.total_weight() > 0.0) {
        return Err(Error::invalid("cannot grow a tree from an empty dataset"));
    }
    grow(&view, params)
}

fn grow(view: &View<'_>, params: &CartParams) -> Result<TreeNode> {
    let dist = view.class_distribution();
    if dist.is_pure() || dist.total() < 2.0 * params.min_instances_per_leaf {
        return Ok(TreeNode::leaf(dist));
    }
    let Some((test, _)) = best_binary_split(view, params) else {
        return Ok(TreeNode::leaf(dist));
    };
    let (rows, branch_weights) = partition(view, &test)?.heavier();
    let children = rows
        .into_iter()
        .map(|r| grow(&View::from_rows(view.data(), r), params))
        .collect::<Result<Vec<_>>>()?;
    Ok(TreeNode::Internal {
        test,
        dist,
        branch_weights,
        children,
    })
}

/// Training misclassification weight summed over a subtree's leaves.
fn leaf_errors(node: &TreeNode) -> f64 {
    match node {
        TreeNode::Leaf { dist, .. } => dist.errors(),
        TreeNode::Internal { children, .. } => children.iter().map(leaf_errors).sum(),
    }
}

/// Weakest-link strength of every internal node, in pre-order.
fn link_strengths(node: &TreeNode, root_total: f64, out: &mut Vec<f64>) {
    if let TreeNode::Internal { dist, children, .. } = node {
        let r_node = dist.errors() / root_total;
        let r_sub = leaf_errors(node) / root_total;
        let leaves = node.num_leaves() as f64;
        out.push(((r_node - r_sub) / (leaves - 1.0)).max(0.0));
        children.iter().for_each(|c| link_strengths(c, root_total, out));
    }
}

fn collapse_weakest(node: &TreeNode, root_total: f64, alpha: f64, tol: f64) -> TreeNode {
    match node {
        TreeNode::Leaf { .. } => node.clone(),
        TreeNode::Internal {
            test,
            dist,
            branch_weights,
            children,
        } => {
            let r_node = dist.errors() / root_total;
            let r_sub = leaf_errors(node) / root_total;
            let g = (r_node - r_sub) / (node.num_leaves() as f64 - 1.0);
            if g <= alpha + tol {
                node.collapsed()
            } else {
                TreeNode::Internal {
                    test: test.clone(),
                    dist: dist.clone(),
                    branch_weights: branch_weights.clone(),
                    children: children
                        .iter()
                        .map(|c| collapse_weakest(c, root_total, alpha, tol))
                        .collect(),
                }
            }
        }
    }
}

const ALPHA_TOLERANCE: f64 = 1e-12;

/// Nested subtrees from weakest-link pruning. The first tree is the full
/// tree with zero-strength links already removed; the last is a single leaf.
pub fn cost_complexity_sequence(root: &TreeNode) -> PruneSequence {
    let root_total = root.dist().total();
    let mut tree = collapse_weakest(root, root_total, 0.0, ALPHA_TOLERANCE);
    let mut alphas = vec![0.0];
    let mut trees = vec![tree.clone()];
    while !tree.is_leaf() {
        let mut g = Vec::new();
        link_strengths(&tree, root_total, &mut g);
        let alpha = g.iter().copied().fold(f64::INFINITY, f64::min);
        let alpha = alpha.max(*alphas.last().expect("non-empty"));
        tree = collapse_weakest(&tree, root_total, alpha, ALPHA_TOLERANCE);
        alphas.push(alpha);
        trees.push(tree.clone());
    }
    PruneSequence { alphas, trees }
}

impl PruneSequence {
    /// Index of the tree in force at complexity `alpha`.
    pub fn index_for(&self, alpha: f64) -> usize {
        self.alphas.partition_point(|&a| a <= alpha).saturating_sub(1)
    }
}

/// Class posterior; a missing tested value follows the heavier branch.
pub fn classify(root: &TreeNode, inst: &Instance) -> Result<Vec<f64>> {
    root.posterior(inst, MissingRouting::HeavierBranch)
}

/// Cross-validated error estimate for every pruning level of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct PruningCurve {
    pub cv_errors: Vec<f64>,
    pub standard_error: f64,
    pub chosen: usize,
}

pub fn pruning_curve(d: &Dataset, seq: &PruneSequence, params: &CartParams) -> Result<PruningCurve> {
    if d.len() < params.pruning_folds {
        return Err(Error::invalid(format!(
            "{} instances cannot be split into {} pruning folds",
            d.len(),
            params.pruning_folds
        )));
    }
    let folds = stratified_k_folds(d, params.pruning_folds, params.seed)?;
    let levels = seq.alphas.len();
    // Representative alpha per level: geometric mean with the next level.
    let probes: Vec<f64> = (0..levels)
        .map(|i| {
            if i + 1 < levels {
                (seq.alphas[i] * seq.alphas[i + 1]).sqrt()
            } else {
                f64::INFINITY
            }
        })
        .collect();

    let fold_errors = |f: usize| -> Result<Vec<f64>> {
        let train = d.subset(&folds.train_indices(f));
        let test = folds.test_indices(f);
        let mut errors = vec![0.0; levels];
        if train.total_weight() <= 0.0 {
            return Ok(errors);
        }
        let fold_seq = cost_complexity_sequence(&grow_full(&train, params)?);
        for (level, &beta) in probes.iter().enumerate() {
            let tree = &fold_seq.trees[fold_seq.index_for(beta)];
            for &i in &test {
                let inst = d.instance(i);
                let Some(y) = d.class_of(i) else { continue };
                if argmax(&classify(tree, inst)?) != y {
                    errors[level] += inst.weight;
                }
            }
        }
        Ok(errors)
    };

    #[cfg(feature = "parallel")]
    let per_fold: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..params.pruning_folds)
            .into_par_iter()
            .map(fold_errors)
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let per_fold: Vec<Vec<f64>> = (0..params.pruning_folds)
        .map(fold_errors)
        .collect::<Result<_>>()?;

    let total = d.total_weight();
    let cv_errors: Vec<f64> = (0..levels)
        .map(|l| per_fold.iter().map(|e| e[l]).sum::<f64>() / total)
        .collect();
    let min_err = cv_errors.iter().copied().fold(f64::INFINITY, f64::min);
    let standard_error = (min_err * (1.0 - min_err) / d.len() as f64).max(0.0).sqrt();
    let limit = if params.use_one_se_rule {
        min_err + standard_error
    } else {
        min_err
    };
    let chosen = (0..levels)
        .rev()
        .find(|&l| cv_errors[l] <= limit + 1e-12)
        .expect("the minimum itself qualifies");
    Ok(PruningCurve {
        cv_errors,
        standard_error,
        chosen,
    })
}

/// Grows the full tree, estimates every pruning level by cross-validation
/// and returns the chosen subtree of the all-data sequence.
pub fn select_pruned_tree(d: &Dataset, params: &CartParams) -> Result<TreeNode> {
    params.validate()?;
    if d.len() < params.pruning_folds {
        return Err(Error::invalid(format!(
            "{} instances cannot be split into {} pruning folds",
            d.len(),
            params.pruning_folds
        )));
    }
    let full = grow_full(d, params)?;
    let mut seq = cost_complexity_sequence(&full);
    if seq.trees.len() == 1 {
        return Ok(seq.trees.pop().expect("one tree"));
    }
    let curve = pruning_curve(d, &seq, params)?;
    Ok(seq.trees.swap_remove(curve.chosen))
}
