//! Impurity and information measures over weighted class counts, plus
//! entropy-minimising supervised discretisation with an MDL stopping rule.
//!
//! All logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Dataset};
use crate::error::{Error, Result};

/// Weighted count per class value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassDistribution {
    weights: Vec<f64>,
    total: f64,
}

impl From<Vec<f64>> for ClassDistribution {
    fn from(weights: Vec<f64>) -> Self {
        ClassDistribution::new(weights)
    }
}

impl From<ClassDistribution> for Vec<f64> {
    fn from(d: ClassDistribution) -> Self {
        d.weights
    }
}

impl ClassDistribution {
    pub fn new(weights: Vec<f64>) -> Self {
        let total = weights.iter().sum();
        ClassDistribution { weights, total }
    }

    pub fn zeros(num_classes: usize) -> Self {
        ClassDistribution {
            weights: vec![0.0; num_classes],
            total: 0.0,
        }
    }

    pub fn add(&mut self, class: usize, weight: f64) {
        self.weights[class] += weight;
        self.total += weight;
    }

    pub fn sub(&mut self, class: usize, weight: f64) {
        self.weights[class] -= weight;
        self.total -= weight;
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, class: usize) -> f64 {
        self.weights[class]
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    /// Index of the heaviest class; ties go to the lowest index.
    pub fn majority(&self) -> usize {
        argmax(&self.weights)
    }

    /// Weight not belonging to the majority class.
    pub fn errors(&self) -> f64 {
        (self.total - self.weights[self.majority()]).max(0.0)
    }

    /// Number of classes with positive weight.
    pub fn classes_present(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn is_pure(&self) -> bool {
        self.classes_present() <= 1
    }

    /// Relative frequencies. An empty distribution maps to uniform.
    pub fn probabilities(&self) -> Vec<f64> {
        if self.total > 0.0 {
            self.weights.iter().map(|w| w / self.total).collect()
        } else {
            let n = self.weights.len() as f64;
            vec![1.0 / n; self.weights.len()]
        }
    }

    pub fn scaled(&self, factor: f64) -> ClassDistribution {
        ClassDistribution::new(self.weights.iter().map(|w| w * factor).collect())
    }

    pub fn merge(&mut self, other: &ClassDistribution) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        self.total += other.total;
    }
}

/// First index of the maximum; NaN entries never win.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `a > b` by more than floating-point noise. Scores closer than this are
/// ties, which callers break by index.
pub(crate) fn clearly_greater(a: f64, b: f64) -> bool {
    a - b > 1e-12 * a.abs().max(b.abs()).max(1.0)
}

pub(crate) fn entropy_bits(weights: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &w in weights {
        if w > 0.0 {
            let p = w / total;
            h -= p * p.log2();
        }
    }
    h.max(0.0)
}

pub(crate) fn gini_index(weights: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    // (W² − Σ w²) / W²: exact for integer counts up to a single rounding.
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    ((total * total - sq) / (total * total)).max(0.0)
}

pub fn entropy(dist: &ClassDistribution) -> Result<f64> {
    if !(dist.total > 0.0) {
        return Err(Error::invalid("entropy of an empty distribution"));
    }
    Ok(entropy_bits(&dist.weights, dist.total))
}

pub fn gini(dist: &ClassDistribution) -> Result<f64> {
    if !(dist.total > 0.0) {
        return Err(Error::invalid("gini of an empty distribution"));
    }
    Ok(gini_index(&dist.weights, dist.total))
}

fn check_partition(parent: &ClassDistribution, children: &[ClassDistribution]) -> Result<()> {
    if !(parent.total > 0.0) {
        return Err(Error::invalid("parent distribution is empty"));
    }
    let sum: f64 = children.iter().map(|c| c.total).sum();
    if (sum - parent.total).abs() > 1e-6 * parent.total {
        return Err(Error::invalid(format!(
            "children weigh {sum} but parent weighs {}",
            parent.total
        )));
    }
    Ok(())
}

/// Weighted entropy remaining after a split: sum over children of
/// `(child total / parent total) * entropy(child)`.
pub(crate) fn conditional_entropy(children: &[ClassDistribution], total: f64) -> f64 {
    children
        .iter()
        .filter(|c| c.total > 0.0)
        .map(|c| c.total / total * entropy_bits(&c.weights, c.total))
        .sum()
}

/// Entropy of the branch sizes themselves.
pub(crate) fn split_info_bits(branch_weights: &[f64]) -> f64 {
    let total: f64 = branch_weights.iter().sum();
    entropy_bits(branch_weights, total)
}

pub fn information_gain(parent: &ClassDistribution, children: &[ClassDistribution]) -> Result<f64> {
    check_partition(parent, children)?;
    Ok(entropy_bits(&parent.weights, parent.total) - conditional_entropy(children, parent.total))
}

pub fn split_info(children: &[ClassDistribution]) -> f64 {
    let sizes: Vec<f64> = children.iter().map(|c| c.total).collect();
    split_info_bits(&sizes)
}

pub const MIN_SPLIT_INFO: f64 = 1e-10;

pub fn gain_ratio(parent: &ClassDistribution, children: &[ClassDistribution]) -> Result<f64> {
    let gain = information_gain(parent, children)?;
    let si = split_info(children);
    if si < MIN_SPLIT_INFO {
        return Ok(0.0);
    }
    Ok(gain / si)
}

/// Normalised mutual information `2 * I(X;Y) / (H(X) + H(Y))` between two
/// discrete columns. Rows where either value is missing are skipped.
pub fn symmetric_uncertainty(
    x: &[Option<usize>],
    y: &[Option<usize>],
    weights: &[f64],
) -> Result<f64> {
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(Error::invalid(format!(
            "column lengths differ: {}, {}, {} weights",
            x.len(),
            y.len(),
            weights.len()
        )));
    }
    let nx = x.iter().flatten().max().map_or(0, |m| m + 1);
    let ny = y.iter().flatten().max().map_or(0, |m| m + 1);
    let mut joint = vec![0.0; nx * ny];
    let mut px = vec![0.0; nx];
    let mut py = vec![0.0; ny];
    let mut total = 0.0;
    for ((xi, yi), &w) in x.iter().zip(y).zip(weights) {
        if let (Some(a), Some(b)) = (xi, yi) {
            joint[a * ny + b] += w;
            px[*a] += w;
            py[*b] += w;
            total += w;
        }
    }
    if total <= 0.0 {
        return Ok(0.0);
    }
    let hx = entropy_bits(&px, total);
    let hy = entropy_bits(&py, total);
    // Sorted so the floating-point sum does not depend on argument order.
    joint.retain(|&w| w > 0.0);
    joint.sort_by(f64::total_cmp);
    let hxy = entropy_bits(&joint, total);
    let denom = hx + hy;
    if denom <= 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * (hx + hy - hxy) / denom).clamp(0.0, 1.0))
}

/// Cut points for one numeric attribute. Bin `i` holds values in
/// `(cut[i-1], cut[i]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutPointSet {
    pub attribute_index: usize,
    pub cut_points: Vec<f64>,
}

impl CutPointSet {
    pub fn num_bins(&self) -> usize {
        self.cut_points.len() + 1
    }

    pub fn bin_of(&self, value: f64) -> usize {
        self.cut_points.partition_point(|&c| c < value)
    }
}

/// One observed (value, class, weight) triple for discretisation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Sample {
    pub value: f64,
    pub class: usize,
    pub weight: f64,
}

/// Recursive entropy-minimising binary cutting with the MDL acceptance
/// test. `n` in the test is the number of samples in the interval;
/// entropies use the sample weights.
pub(crate) fn mdl_cut_points(samples: &mut [Sample], num_classes: usize) -> Vec<f64> {
    for s in samples.iter_mut() {
        if !(s.weight > 0.0) {
            s.weight = 0.0;
        }
    }
    samples.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.class.cmp(&b.class)));
    let mut cuts = Vec::new();
    cut_interval(samples, num_classes, &mut cuts);
    cuts.sort_by(f64::total_cmp);
    cuts
}

fn distribution_of(samples: &[Sample], num_classes: usize) -> ClassDistribution {
    let mut d = ClassDistribution::zeros(num_classes);
    for s in samples {
        d.add(s.class, s.weight);
    }
    d
}

fn cut_interval(samples: &[Sample], num_classes: usize, cuts: &mut Vec<f64>) {
    let n = samples.len();
    if n < 2 {
        return;
    }
    let whole = distribution_of(samples, num_classes);
    if whole.total <= 0.0 {
        return;
    }

    // Distinct-value groups: (start, end) ranges into samples.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || samples[i].value != samples[start].value {
            groups.push((start, i));
            start = i;
        }
    }
    if groups.len() < 2 {
        return;
    }
    let group_single_class = |g: (usize, usize)| -> Option<usize> {
        let d = distribution_of(&samples[g.0..g.1], num_classes);
        if d.classes_present() == 1 {
            Some(d.majority())
        } else {
            None
        }
    };

    let total_entropy = entropy_bits(&whole.weights, whole.total);
    let mut left = ClassDistribution::zeros(num_classes);
    let mut right = whole.clone();
    let mut best: Option<(f64, usize, f64)> = None; // (conditional entropy, split position, cut)
    for g in 0..groups.len() - 1 {
        for s in &samples[groups[g].0..groups[g].1] {
            left.add(s.class, s.weight);
            right.sub(s.class, s.weight);
        }
        let a = samples[groups[g].0].value;
        let b = samples[groups[g + 1].0].value;
        let mid = a + (b - a) / 2.0;
        if !(a < mid && mid < b) {
            continue;
        }
        // Only class boundaries can hold the optimum.
        if let (Some(ca), Some(cb)) = (group_single_class(groups[g]), group_single_class(groups[g + 1])) {
            if ca == cb {
                continue;
            }
        }
        if left.total <= 0.0 || right.total <= 0.0 {
            continue;
        }
        let cond = (left.total * entropy_bits(&left.weights, left.total)
            + right.total * entropy_bits(&right.weights, right.total))
            / whole.total;
        if best.is_none_or(|(c, _, _)| cond < c) {
            best = Some((cond, groups[g].1, mid));
        }
    }
    let Some((cond, pos, cut)) = best else {
        return;
    };

    let (ls, rs) = samples.split_at(pos);
    let ld = distribution_of(ls, num_classes);
    let rd = distribution_of(rs, num_classes);
    let gain = total_entropy - cond;
    let k = whole.classes_present() as f64;
    let k1 = ld.classes_present() as f64;
    let k2 = rd.classes_present() as f64;
    let e1 = entropy_bits(&ld.weights, ld.total);
    let e2 = entropy_bits(&rd.weights, rd.total);
    let nf = n as f64;
    let delta = (3f64.powf(k) - 2.0).log2() - (k * total_entropy - k1 * e1 - k2 * e2);
    let threshold = ((nf - 1.0).log2() + delta) / nf;
    if gain > threshold {
        cuts.push(cut);
        cut_interval(ls, num_classes, cuts);
        cut_interval(rs, num_classes, cuts);
    }
}

/// Supervised discretisation of one numeric attribute over all labelled,
/// non-missing rows of `d`.
pub fn discretize_mdl(d: &Dataset, attribute_index: usize) -> Result<CutPointSet> {
    if attribute_index >= d.num_attributes() || attribute_index == d.class_index() {
        return Err(Error::invalid(format!(
            "attribute {attribute_index} is not a feature column"
        )));
    }
    if !d.attribute(attribute_index).is_numeric() {
        return Err(Error::invalid(format!(
            "attribute '{}' is not numeric",
            d.attribute(attribute_index).name
        )));
    }
    let mut samples: Vec<Sample> = d
        .instances()
        .iter()
        .enumerate()
        .filter_map(|(i, inst)| match (inst.cells[attribute_index], d.class_of(i)) {
            (Cell::Numeric(value), Some(class)) => Some(Sample {
                value,
                class,
                weight: inst.weight,
            }),
            _ => None,
        })
        .collect();
    Ok(CutPointSet {
        attribute_index,
        cut_points: mdl_cut_points(&mut samples, d.num_classes()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttributeSpec, Instance};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dist(w: &[f64]) -> ClassDistribution {
        ClassDistribution::new(w.to_vec())
    }

    // Independent evaluation straight from the definition, used to derive
    // the frozen constants below.
    fn h(counts: &[f64]) -> f64 {
        let n: f64 = counts.iter().sum();
        -counts
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|&c| (c / n) * (c / n).ln() / std::f64::consts::LN_2)
            .sum::<f64>()
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy(&dist(&[8.0, 0.0])).unwrap(), 0.0);
        assert_eq!(entropy(&dist(&[4.0, 4.0])).unwrap(), 1.0);
        assert_abs_diff_eq!(h(&[9.0, 5.0]), 0.940_285_958, epsilon = 1e-9);
        assert_abs_diff_eq!(entropy(&dist(&[9.0, 5.0])).unwrap(), 0.94029, epsilon = 1e-5);
        assert!(entropy(&dist(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn information_gain_cases() {
        let parent = dist(&[9.0, 5.0]);
        assert_abs_diff_eq!(information_gain(&parent, std::slice::from_ref(&parent)).unwrap(), 0.0, epsilon = 1e-15);
        let oracle = h(&[9.0, 5.0]) - 8.0 / 14.0 * h(&[6.0, 2.0]) - 6.0 / 14.0 * h(&[3.0, 3.0]);
        let g = information_gain(&parent, &[dist(&[6.0, 2.0]), dist(&[3.0, 3.0])]).unwrap();
        assert_abs_diff_eq!(g, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(g, 0.04813, epsilon = 1e-5);
        let perfect = information_gain(&dist(&[4.0, 4.0]), &[dist(&[4.0, 0.0]), dist(&[0.0, 4.0])]);
        assert_eq!(perfect.unwrap(), 1.0);
        assert!(information_gain(&parent, &[dist(&[6.0, 2.0])]).is_err());
    }

    #[test]
    fn gain_ratio_cases() {
        let parent = dist(&[9.0, 5.0]);
        let children = [dist(&[6.0, 2.0]), dist(&[3.0, 3.0])];
        let si = h(&[8.0, 6.0]);
        assert_abs_diff_eq!(si, 0.98523, epsilon = 1e-5);
        let r = gain_ratio(&parent, &children).unwrap();
        assert_abs_diff_eq!(r, 0.04885, epsilon = 1e-5);

        let halves = [dist(&[6.0, 1.0]), dist(&[1.0, 6.0])];
        let p = dist(&[7.0, 7.0]);
        assert_abs_diff_eq!(
            gain_ratio(&p, &halves).unwrap(),
            information_gain(&p, &halves).unwrap(),
            epsilon = 1e-15
        );
        assert_eq!(gain_ratio(&parent, &[parent.clone(), dist(&[0.0, 0.0])]).unwrap(), 0.0);
    }

    #[test]
    fn gini_cases() {
        assert_eq!(gini(&dist(&[8.0, 0.0])).unwrap(), 0.0);
        assert_eq!(gini(&dist(&[4.0, 4.0])).unwrap(), 0.5);
        assert_eq!(gini(&dist(&[9.0, 5.0])).unwrap(), 90.0 / 196.0);
        assert!(gini(&dist(&[])).is_err());
    }

    #[test]
    fn su_cases() {
        let w = [1.0; 4];
        let x = [Some(0), Some(0), Some(1), Some(1)];
        let y = [Some(0), Some(1), Some(0), Some(1)];
        assert_eq!(symmetric_uncertainty(&x, &x, &w).unwrap(), 1.0);
        assert_abs_diff_eq!(symmetric_uncertainty(&x, &y, &w).unwrap(), 0.0, epsilon = 1e-15);
        let constant = [Some(0); 4];
        assert_eq!(symmetric_uncertainty(&constant, &constant, &w).unwrap(), 0.0);
        assert!(symmetric_uncertainty(&x, &y[..3], &w).is_err());
    }

    fn one_attribute(values: &[f64], classes: &[usize]) -> Dataset {
        let schema = vec![
            AttributeSpec::numeric("v"),
            AttributeSpec::nominal("c", ["A", "B"]),
        ];
        let inst = values
            .iter()
            .zip(classes)
            .map(|(&v, &c)| Instance::new(vec![Cell::Numeric(v), Cell::Nominal(c)]))
            .collect();
        Dataset::new(schema, 1, inst).unwrap()
    }

    #[test]
    fn mdl_single_boundary() {
        // gain 1.0 against threshold (log2 3 + log2 7 - 2) / 4 ~= 0.598
        let d = one_attribute(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        assert_eq!(discretize_mdl(&d, 0).unwrap().cut_points, vec![2.5]);
    }

    #[test]
    fn mdl_rejects_alternating() {
        let d = one_attribute(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 0, 1]);
        assert!(discretize_mdl(&d, 0).unwrap().cut_points.is_empty());
    }

    #[test]
    fn mdl_constant_attribute() {
        let d = one_attribute(&[3.0; 6], &[0, 1, 0, 1, 0, 1]);
        assert!(discretize_mdl(&d, 0).unwrap().cut_points.is_empty());
        assert!(discretize_mdl(&d, 1).is_err());
    }

    #[test]
    fn bins_follow_cut_points() {
        let c = CutPointSet { attribute_index: 0, cut_points: vec![1.0, 2.0] };
        assert_eq!(c.bin_of(0.5), 0);
        assert_eq!(c.bin_of(1.0), 0);
        assert_eq!(c.bin_of(1.5), 1);
        assert_eq!(c.bin_of(9.0), 2);
        assert_eq!(c.num_bins(), 3);
    }

    proptest! {
        #[test]
        fn measures_scale_and_permutation_invariant(
            w in prop::collection::vec(0.0f64..50.0, 2..6),
            c in 0.01f64..100.0,
            rot in 0usize..6,
        ) {
            prop_assume!(w.iter().sum::<f64>() > 1e-6);
            let base = dist(&w);
            let scaled = base.scaled(c);
            let mut rotated = w.clone();
            let r = rot % rotated.len();
            rotated.rotate_left(r);
            let rotated = dist(&rotated);
            let e = entropy(&base).unwrap();
            let g = gini(&base).unwrap();
            prop_assert!((entropy(&scaled).unwrap() - e).abs() < 1e-9);
            prop_assert!((gini(&scaled).unwrap() - g).abs() < 1e-9);
            prop_assert!((entropy(&rotated).unwrap() - e).abs() < 1e-9);
            prop_assert!((gini(&rotated).unwrap() - g).abs() < 1e-9);
            prop_assert!(e <= (w.len() as f64).log2() + 1e-12);
            prop_assert!(g <= 1.0 - 1.0 / w.len() as f64 + 1e-12);
        }

        #[test]
        fn gain_nonnegative_on_partitions(
            rows in prop::collection::vec((0usize..3, 0usize..3, 0.1f64..5.0), 1..40),
        ) {
            let mut parent = ClassDistribution::zeros(3);
            let mut children = vec![ClassDistribution::zeros(3); 3];
            for &(branch, class, w) in &rows {
                parent.add(class, w);
                children[branch].add(class, w);
            }
            let g = information_gain(&parent, &children).unwrap();
            prop_assert!(g >= -1e-12);
            let r = gain_ratio(&parent, &children).unwrap();
            prop_assert!(r.is_finite() && r >= -1e-12);
        }

        #[test]
        fn su_is_symmetric(
            rows in prop::collection::vec((0usize..4, 0usize..3, 0.1f64..3.0), 1..50),
        ) {
            let x: Vec<_> = rows.iter().map(|r| Some(r.0)).collect();
            let y: Vec<_> = rows.iter().map(|r| Some(r.1)).collect();
            let w: Vec<_> = rows.iter().map(|r| r.2).collect();
            let a = symmetric_uncertainty(&x, &y, &w).unwrap();
            let b = symmetric_uncertainty(&y, &x, &w).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn mdl_cuts_sit_between_observed_values(
            rows in prop::collection::vec((0i32..30, 0usize..2), 2..80),
        ) {
            let values: Vec<f64> = rows.iter().map(|r| r.0 as f64 / 2.0).collect();
            let classes: Vec<usize> = rows.iter().map(|r| r.1).collect();
            let d = one_attribute(&values, &classes);
            let cuts = discretize_mdl(&d, 0).unwrap().cut_points;
            for w in cuts.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
            for c in cuts {
                prop_assert!(values.iter().any(|&v| v < c));
                prop_assert!(values.iter().any(|&v| v > c));
                prop_assert!(!values.contains(&c));
            }
        }
    }
}
