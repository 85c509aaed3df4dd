//! Node structure shared by the C4.5, CART and NBTree inducers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeSpec, Cell, Instance, View};
use crate::error::{Error, Result};
use crate::measures::{argmax, ClassDistribution};
use crate::nbtree::NaiveBayesModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    /// One branch per nominal value.
    NominalMultiway { arity: usize },
    /// Branch 0: value <= threshold, branch 1: value > threshold.
    Threshold { threshold: f64 },
    /// Branch 0: value == `value`, branch 1: any other value.
    NominalBinary { value: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitTest {
    pub attribute: usize,
    #[serde(flatten)]
    pub kind: SplitKind,
}

impl SplitTest {
    pub fn arity(&self) -> usize {
        match self.kind {
            SplitKind::NominalMultiway { arity } => arity,
            SplitKind::Threshold { .. } | SplitKind::NominalBinary { .. } => 2,
        }
    }

    /// Branch taken by a cell, `None` when the cell is missing.
    pub fn branch(&self, cell: Cell) -> Result<Option<usize>> {
        match (&self.kind, cell) {
            (_, Cell::Missing) => Ok(None),
            (SplitKind::Threshold { threshold }, Cell::Numeric(v)) => {
                Ok(Some(if v <= *threshold { 0 } else { 1 }))
            }
            (SplitKind::NominalMultiway { arity }, Cell::Nominal(v)) if v < *arity => Ok(Some(v)),
            (SplitKind::NominalBinary { value }, Cell::Nominal(v)) => {
                Ok(Some(if v == *value { 0 } else { 1 }))
            }
            (kind, cell) => Err(Error::Schema(format!(
                "attribute {} holds {:?}, which the test {:?} cannot route",
                self.attribute, cell, kind
            ))),
        }
    }

    pub fn describe(&self, schema: &[AttributeSpec], branch: usize) -> String {
        let spec = &schema[self.attribute];
        match self.kind {
            SplitKind::Threshold { threshold } => {
                let op = if branch == 0 { "<=" } else { ">" };
                format!("{} {} {}", spec.name, op, display_number(threshold))
            }
            SplitKind::NominalMultiway { .. } => {
                format!("{} = {}", spec.name, spec.nominal_values[branch])
            }
            SplitKind::NominalBinary { value } => {
                let op = if branch == 0 { "=" } else { "!=" };
                format!("{} {} {}", spec.name, op, spec.nominal_values[value])
            }
        }
    }
}

/// Midpoint thresholds carry float noise; show at most six decimals.
fn display_number(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        dist: ClassDistribution,
        predicted: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        naive_bayes: Option<NaiveBayesModel>,
    },
    Internal {
        test: SplitTest,
        dist: ClassDistribution,
        /// Training weight with a known test value, per branch.
        branch_weights: Vec<f64>,
        children: Vec<TreeNode>,
    },
}

/// How an instance whose tested value is missing descends a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingRouting {
    /// Visit every branch; mix the results by training-weight fraction.
    Fractional,
    /// Follow the branch that held the most training weight.
    HeavierBranch,
}

impl TreeNode {
    pub fn leaf(dist: ClassDistribution) -> TreeNode {
        let predicted = dist.majority();
        TreeNode::Leaf {
            dist,
            predicted,
            naive_bayes: None,
        }
    }

    pub fn dist(&self) -> &ClassDistribution {
        match self {
            TreeNode::Leaf { dist, .. } | TreeNode::Internal { dist, .. } => dist,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => children.iter().map(TreeNode::num_leaves).sum(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => {
                1 + children.iter().map(TreeNode::num_nodes).sum::<usize>()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { children, .. } => {
                1 + children.iter().map(TreeNode::depth).max().unwrap_or(0)
            }
        }
    }

    /// Attribute indices tested anywhere in the tree.
    pub fn tested_attributes(&self) -> Vec<usize> {
        fn walk(node: &TreeNode, out: &mut Vec<usize>) {
            if let TreeNode::Internal { test, children, .. } = node {
                out.push(test.attribute);
                children.iter().for_each(|c| walk(c, out));
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Collapse this node into a leaf carrying its training distribution.
    pub fn collapsed(&self) -> TreeNode {
        TreeNode::leaf(self.dist().clone())
    }

    /// Class posterior for one instance; sums to one.
    pub fn posterior(&self, inst: &Instance, routing: MissingRouting) -> Result<Vec<f64>> {
        let mut p = self.posterior_raw(inst, routing)?;
        let s: f64 = p.iter().sum();
        if s > 0.0 {
            p.iter_mut().for_each(|x| *x /= s);
        }
        Ok(p)
    }

    fn posterior_raw(&self, inst: &Instance, routing: MissingRouting) -> Result<Vec<f64>> {
        match self {
            TreeNode::Leaf {
                dist, naive_bayes, ..
            } => match naive_bayes {
                Some(nb) => nb.posterior(inst),
                None => Ok(dist.probabilities()),
            },
            TreeNode::Internal {
                test,
                dist,
                branch_weights,
                children,
            } => {
                let cell = *inst.cells.get(test.attribute).ok_or_else(|| {
                    Error::Schema(format!(
                        "instance has {} cells but the tree tests attribute {}",
                        inst.cells.len(),
                        test.attribute
                    ))
                })?;
                if let Some(b) = test.branch(cell)? {
                    return children[b].posterior_raw(inst, routing);
                }
                let known: f64 = branch_weights.iter().sum();
                if known <= 0.0 {
                    return Ok(dist.probabilities());
                }
                match routing {
                    MissingRouting::HeavierBranch => {
                        children[argmax(branch_weights)].posterior_raw(inst, routing)
                    }
                    MissingRouting::Fractional => {
                        let mut mix = vec![0.0; dist.num_classes()];
                        for (child, &w) in children.iter().zip(branch_weights) {
                            if w > 0.0 {
                                let p = child.posterior_raw(inst, routing)?;
                                for (m, q) in mix.iter_mut().zip(p) {
                                    *m += w / known * q;
                                }
                            }
                        }
                        Ok(mix)
                    }
                }
            }
        }
    }

    /// Indented text rendering in the familiar `attr <= x: class (n/errors)` form.
    pub fn render(&self, schema: &[AttributeSpec], class_index: usize) -> String {
        let mut out = String::new();
        match self {
            TreeNode::Leaf { dist, predicted, .. } => {
                let _ = writeln!(
                    out,
                    ": {} ({})",
                    schema[class_index].nominal_values[*predicted],
                    leaf_counts(dist)
                );
            }
            TreeNode::Internal { .. } => self.render_into(schema, class_index, 0, &mut out),
        }
        out
    }

    fn render_into(&self, schema: &[AttributeSpec], class_index: usize, depth: usize, out: &mut String) {
        let TreeNode::Internal { test, children, .. } = self else {
            return;
        };
        for (b, child) in children.iter().enumerate() {
            let indent = "|   ".repeat(depth);
            let label = test.describe(schema, b);
            match child {
                TreeNode::Leaf {
                    dist,
                    predicted,
                    naive_bayes,
                } => {
                    let what = if naive_bayes.is_some() {
                        "NB model".to_string()
                    } else {
                        schema[class_index].nominal_values[*predicted].clone()
                    };
                    let _ = writeln!(out, "{indent}{label}: {what} ({})", leaf_counts(dist));
                }
                TreeNode::Internal { .. } => {
                    let _ = writeln!(out, "{indent}{label}");
                    child.render_into(schema, class_index, depth + 1, out);
                }
            }
        }
    }
}

fn leaf_counts(dist: &ClassDistribution) -> String {
    let err = dist.errors();
    if err > 0.0 {
        format!("{}/{}", round2(dist.total()), round2(err))
    } else {
        format!("{}", round2(dist.total()))
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Rows of `view` sent to each branch of `test`. Rows with a missing value
/// are returned separately together with the known weight per branch.
pub(crate) struct Partition {
    pub branches: Vec<Vec<(usize, f64)>>,
    pub missing: Vec<(usize, f64)>,
    pub known_weights: Vec<f64>,
}

pub(crate) fn partition(view: &View<'_>, test: &SplitTest) -> Result<Partition> {
    let arity = test.arity();
    let mut branches = vec![Vec::new(); arity];
    let mut missing = Vec::new();
    let mut known_weights = vec![0.0; arity];
    for &(row, w) in view.rows() {
        match test.branch(view.cell(row, test.attribute))? {
            Some(b) => {
                branches[b].push((row, w));
                known_weights[b] += w;
            }
            None => missing.push((row, w)),
        }
    }
    Ok(Partition {
        branches,
        missing,
        known_weights,
    })
}

impl Partition {
    /// Child row lists with missing-valued rows spread over every branch in
    /// proportion to the branch's known weight.
    pub fn fractional(mut self) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
        let known: f64 = self.known_weights.iter().sum();
        if known > 0.0 {
            for (b, rows) in self.branches.iter_mut().enumerate() {
                let frac = self.known_weights[b] / known;
                if frac > 0.0 {
                    rows.extend(self.missing.iter().map(|&(r, w)| (r, w * frac)));
                }
            }
        }
        (self.branches, self.known_weights)
    }

    /// Child row lists with missing-valued rows sent to the heaviest branch.
    pub fn heavier(mut self) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
        let target = argmax(&self.known_weights);
        self.branches[target].extend(self.missing.iter().copied());
        (self.branches, self.known_weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_display_trimmed() {
        assert_eq!(display_number(21.564999999999998), "21.565");
        assert_eq!(display_number(182.0), "182");
        assert_eq!(display_number(0.4365), "0.4365");
        assert_eq!(display_number(-1e-9), "0");
    }

    fn stump() -> TreeNode {
        TreeNode::Internal {
            test: SplitTest {
                attribute: 0,
                kind: SplitKind::Threshold { threshold: 2.5 },
            },
            dist: ClassDistribution::new(vec![8.0, 6.0]),
            branch_weights: vec![8.0, 6.0],
            children: vec![
                TreeNode::leaf(ClassDistribution::new(vec![8.0, 0.0])),
                TreeNode::leaf(ClassDistribution::new(vec![0.0, 6.0])),
            ],
        }
    }

    #[test]
    fn leaf_posterior_is_relative_frequency() {
        let leaf = TreeNode::leaf(ClassDistribution::new(vec![3.0, 1.0]));
        let p = leaf
            .posterior(&Instance::new(vec![Cell::Missing]), MissingRouting::Fractional)
            .unwrap();
        assert_eq!(p, vec![0.75, 0.25]);
    }

    #[test]
    fn routes_by_threshold() {
        let t = stump();
        let lo = Instance::new(vec![Cell::Numeric(1.0)]);
        let hi = Instance::new(vec![Cell::Numeric(2.6)]);
        assert_eq!(t.posterior(&lo, MissingRouting::Fractional).unwrap(), vec![1.0, 0.0]);
        assert_eq!(t.posterior(&hi, MissingRouting::Fractional).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn missing_value_mixes_by_branch_weight() {
        let t = stump();
        let m = Instance::new(vec![Cell::Missing]);
        let p = t.posterior(&m, MissingRouting::Fractional).unwrap();
        assert!((p[0] - 8.0 / 14.0).abs() < 1e-15 && (p[1] - 6.0 / 14.0).abs() < 1e-15);
        let h = t.posterior(&m, MissingRouting::HeavierBranch).unwrap();
        assert_eq!(h, vec![1.0, 0.0]);
    }

    #[test]
    fn wrong_cell_kind_is_a_schema_error() {
        let t = stump();
        let bad = Instance::new(vec![Cell::Nominal(0)]);
        assert!(matches!(
            t.posterior(&bad, MissingRouting::Fractional),
            Err(Error::Schema(_))
        ));
        assert!(t.posterior(&Instance::new(vec![]), MissingRouting::Fractional).is_err());
    }

    #[test]
    fn counts_and_render() {
        let t = stump();
        assert_eq!((t.num_leaves(), t.num_nodes(), t.depth()), (2, 3, 1));
        let schema = vec![
            AttributeSpec::numeric("OC"),
            AttributeSpec::nominal("label", ["low", "high"]),
        ];
        let text = t.render(&schema, 1);
        assert_eq!(text, "OC <= 2.5: low (8)\nOC > 2.5: high (6)\n");
    }
}
