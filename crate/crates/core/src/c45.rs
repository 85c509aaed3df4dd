//! C4.5 induction: gain-ratio splits, numeric thresholds, fractional
//! handling of missing values and error-based subtree replacement.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::{Cell, Dataset, Instance, View};
use crate::error::{Error, Result};
use crate::measures::{clearly_greater, entropy_bits, split_info_bits, ClassDistribution, MIN_SPLIT_INFO};
use crate::tree::{partition, MissingRouting, SplitKind, SplitTest, TreeNode};

/// Gains at or below this are treated as zero.
pub const MIN_GAIN: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct C45Params {
    pub confidence_factor: f64,
    pub min_instances_per_leaf: f64,
    pub use_mdl_numeric_penalty: bool,
    pub pruning: bool,
}

impl Default for C45Params {
    fn default() -> Self {
        C45Params {
            confidence_factor: 0.25,
            min_instances_per_leaf: 2.0,
            use_mdl_numeric_penalty: true,
            pruning: true,
        }
    }
}

impl C45Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence_factor > 0.0 && self.confidence_factor <= 0.5) {
            return Err(Error::invalid(format!(
                "confidence factor {} outside (0, 0.5]",
                self.confidence_factor
            )));
        }
        if !(self.min_instances_per_leaf > 0.0) {
            return Err(Error::invalid("min_instances_per_leaf must be positive"));
        }
        Ok(())
    }
}

/// A scored split candidate for one attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub test: SplitTest,
    /// Information gain after the known-fraction factor and, for numeric
    /// attributes, the MDL penalty.
    pub gain: f64,
    pub gain_ratio: f64,
}

/// Best candidate for every attribute that yields a usable split: at least
/// two branches reach the minimum leaf weight and the gain is positive.
pub fn candidates(view: &View<'_>, params: &C45Params) -> Vec<Candidate> {
    let d = view.data();
    d.feature_indices()
        .filter_map(|a| {
            if d.attribute(a).is_numeric() {
                numeric_candidate(view, a, params)
            } else {
                nominal_candidate(view, a, params)
            }
        })
        .filter(|c| c.gain > MIN_GAIN)
        .collect()
}

fn nominal_candidate(view: &View<'_>, attribute: usize, params: &C45Params) -> Option<Candidate> {
    let arity = view.data().attribute(attribute).arity();
    let classes = view.data().num_classes();
    let mut branches = vec![ClassDistribution::zeros(classes); arity];
    let mut known = ClassDistribution::zeros(classes);
    let mut unknown = 0.0;
    for &(row, w) in view.rows() {
        match view.cell(row, attribute) {
            Cell::Nominal(v) => {
                branches[v].add(view.class_of(row), w);
                known.add(view.class_of(row), w);
            }
            _ => unknown += w,
        }
    }
    let big_enough = branches
        .iter()
        .filter(|b| b.total() >= params.min_instances_per_leaf)
        .count();
    if big_enough < 2 || known.total() <= 0.0 {
        return None;
    }
    let sizes: Vec<f64> = branches.iter().map(ClassDistribution::total).collect();
    let gain = known_fraction_gain(&known, &branches, unknown);
    Some(Candidate {
        test: SplitTest {
            attribute,
            kind: SplitKind::NominalMultiway { arity },
        },
        gain,
        gain_ratio: ratio(gain, &sizes, unknown),
    })
}

fn numeric_candidate(view: &View<'_>, attribute: usize, params: &C45Params) -> Option<Candidate> {
    let classes = view.data().num_classes();
    let mut known: Vec<(f64, usize, f64)> = Vec::with_capacity(view.len());
    let mut unknown = 0.0;
    for &(row, w) in view.rows() {
        match view.cell(row, attribute) {
            Cell::Numeric(v) => known.push((v, view.class_of(row), w)),
            _ => unknown += w,
        }
    }
    if known.len() < 2 {
        return None;
    }
    known.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut whole = ClassDistribution::zeros(classes);
    for &(_, c, w) in &known {
        whole.add(c, w);
    }
    let base = entropy_bits(whole.weights(), whole.total());
    let mut left = ClassDistribution::zeros(classes);
    let mut right = whole.clone();
    let mut valid_thresholds = 0usize;
    // (gain over known rows, threshold, left weight, right weight)
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for i in 0..known.len() - 1 {
        let (v, c, w) = known[i];
        left.add(c, w);
        right.sub(c, w);
        let next = known[i + 1].0;
        if next <= v {
            continue;
        }
        let mid = v + (next - v) / 2.0;
        if !(v < mid && mid < next) {
            continue;
        }
        if left.total() < params.min_instances_per_leaf || right.total() < params.min_instances_per_leaf {
            continue;
        }
        valid_thresholds += 1;
        let cond = (left.total() * entropy_bits(left.weights(), left.total())
            + right.total() * entropy_bits(right.weights(), right.total()))
            / whole.total();
        let gain = base - cond;
        if best.is_none_or(|b| clearly_greater(gain, b.0)) {
            best = Some((gain, mid, left.total(), right.total()));
        }
    }
    let (gain_known, threshold, lw, rw) = best?;
    let total = whole.total() + unknown;
    let mut gain = whole.total() / total * gain_known;
    if params.use_mdl_numeric_penalty {
        gain -= (valid_thresholds as f64).log2() / whole.total();
    }
    Some(Candidate {
        test: SplitTest {
            attribute,
            kind: SplitKind::Threshold { threshold },
        },
        gain,
        gain_ratio: ratio(gain, &[lw, rw], unknown),
    })
}

/// Gain over known-valued rows scaled by the fraction of weight that is known.
fn known_fraction_gain(known: &ClassDistribution, branches: &[ClassDistribution], unknown: f64) -> f64 {
    let k = known.total();
    let cond: f64 = branches
        .iter()
        .filter(|b| b.total() > 0.0)
        .map(|b| b.total() / k * entropy_bits(b.weights(), b.total()))
        .sum();
    k / (k + unknown) * (entropy_bits(known.weights(), k) - cond)
}

/// Gain ratio; missing-valued weight counts as one extra branch of the split info.
fn ratio(gain: f64, branch_sizes: &[f64], unknown: f64) -> f64 {
    let mut sizes = branch_sizes.to_vec();
    if unknown > 0.0 {
        sizes.push(unknown);
    }
    let si = split_info_bits(&sizes);
    if si < MIN_SPLIT_INFO {
        0.0
    } else {
        gain / si
    }
}

/// Among candidates whose gain is at least the mean gain, the one with the
/// highest gain ratio; ties go to the lowest attribute index.
pub fn select(candidates: &[Candidate]) -> Option<&Candidate> {
    if candidates.is_empty() {
        return None;
    }
    let mean = candidates.iter().map(|c| c.gain).sum::<f64>() / candidates.len() as f64;
    let floor = mean - 1e-12 * mean.abs().max(1.0);
    let mut best: Option<&Candidate> = None;
    for c in candidates.iter().filter(|c| c.gain >= floor) {
        let better = match best {
            None => true,
            Some(b) => {
                clearly_greater(c.gain_ratio, b.gain_ratio)
                    || (!clearly_greater(b.gain_ratio, c.gain_ratio) && c.test.attribute < b.test.attribute)
            }
        };
        if better {
            best = Some(c);
        }
    }
    best
}

pub fn best_split(view: &View<'_>, params: &C45Params) -> Option<(SplitTest, f64)> {
    let all = candidates(view, params);
    select(&all).map(|c| (c.test.clone(), c.gain_ratio))
}

pub fn induce(d: &Dataset, params: &C45Params) -> Result<TreeNode> {
    params.validate()?;
    let view = View::full(d);
    if view.is_empty() || !(view.total_weight() > 0.0) {
        return Err(Error::invalid("cannot induce a tree from an empty dataset"));
    }
    let grown = grow(&view, params)?;
    Ok(if params.pruning {
        prune_ebp(&grown, params)?
    } else {
        grown
    })
}

fn grow(view: &View<'_>, params: &C45Params) -> Result<TreeNode> {
    let dist = view.class_distribution();
    if dist.is_pure() || dist.total() < 2.0 * params.min_instances_per_leaf {
        return Ok(TreeNode::leaf(dist));
    }
    let Some((test, _)) = best_split(view, params) else {
        return Ok(TreeNode::leaf(dist));
    };
    let (rows, branch_weights) = partition(view, &test)?.fractional();
    let mut children = Vec::with_capacity(rows.len());
    for (b, child_rows) in rows.into_iter().enumerate() {
        if branch_weights[b] <= 0.0 {
            // Branch never seen in training: predict the parent's majority.
            children.push(TreeNode::leaf(dist.clone()));
        } else {
            let child = View::from_rows(view.data(), child_rows);
            children.push(grow(&child, params)?);
        }
    }
    Ok(TreeNode::Internal {
        test,
        dist,
        branch_weights,
        children,
    })
}

fn z_for(cf: f64) -> f64 {
    if cf >= 0.5 {
        0.0
    } else {
        Normal::standard().inverse_cdf(1.0 - cf)
    }
}

fn upper_error_rate(errors: f64, total: f64, z: f64) -> f64 {
    let f = errors / total;
    let z2 = z * z;
    let under = f / total - f * f / total + z2 / (4.0 * total * total);
    let bound = (f + z2 / (2.0 * total) + z * under.max(0.0).sqrt()) / (1.0 + z2 / total);
    bound.clamp(0.0, 1.0)
}

/// Upper confidence limit on a leaf's true error rate from `errors` out of
/// `total` training instances, at confidence factor `cf` (normal
/// approximation to the binomial).
pub fn pessimistic_error(errors: f64, total: f64, cf: f64) -> Result<f64> {
    if !(total > 0.0) || !(errors >= 0.0) || errors > total {
        return Err(Error::invalid(format!(
            "need 0 <= errors <= total and total > 0, got {errors}/{total}"
        )));
    }
    if !(cf > 0.0 && cf <= 0.5) {
        return Err(Error::invalid(format!("confidence factor {cf} outside (0, 0.5]")));
    }
    Ok(upper_error_rate(errors, total, z_for(cf)))
}

fn estimated_errors(dist: &ClassDistribution, z: f64) -> f64 {
    let n = dist.total();
    if n <= 0.0 {
        return 0.0;
    }
    let e = dist.errors().min(n);
    n * upper_error_rate(e, n, z)
}

/// Sum of `n * pessimistic_error` over the leaves of a subtree. Leaves
/// behind a branch that carried no training weight count as zero.
pub fn subtree_estimated_errors(node: &TreeNode, cf: f64) -> f64 {
    subtree_errors_z(node, z_for(cf))
}

fn subtree_errors_z(node: &TreeNode, z: f64) -> f64 {
    match node {
        TreeNode::Leaf { dist, .. } => estimated_errors(dist, z),
        TreeNode::Internal {
            children,
            branch_weights,
            ..
        } => children
            .iter()
            .zip(branch_weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(c, _)| subtree_errors_z(c, z))
            .sum(),
    }
}

/// Bottom-up subtree replacement: a node becomes a leaf whenever the leaf's
/// estimated error does not exceed the summed estimate of its leaves.
pub fn prune_ebp(root: &TreeNode, params: &C45Params) -> Result<TreeNode> {
    params.validate()?;
    Ok(prune_node(root, z_for(params.confidence_factor)))
}

fn prune_node(node: &TreeNode, z: f64) -> TreeNode {
    match node {
        TreeNode::Leaf { .. } => node.clone(),
        TreeNode::Internal {
            test,
            dist,
            branch_weights,
            children,
        } => {
            let pruned = TreeNode::Internal {
                test: test.clone(),
                dist: dist.clone(),
                branch_weights: branch_weights.clone(),
                children: children.iter().map(|c| prune_node(c, z)).collect(),
            };
            if estimated_errors(dist, z) <= subtree_errors_z(&pruned, z) {
                node.collapsed()
            } else {
                pruned
            }
        }
    }
}

/// Class posterior with fractional descent on missing values.
pub fn classify(root: &TreeNode, inst: &Instance) -> Result<Vec<f64>> {
    root.posterior(inst, MissingRouting::Fractional)
}
