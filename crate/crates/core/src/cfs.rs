//! Correlation-based feature subset selection.
//!
//! Correlations are symmetric uncertainties between discretised columns.
//! A subset of `k` features scores
//! `k * mean(r_cf) / sqrt(k + k (k - 1) * mean(r_ff))`, and a forward
//! best-first search looks for the highest-scoring subset.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeKind, Cell, Dataset, Instance};
use crate::error::{Error, Result};
use crate::measures::{discretize_mdl, symmetric_uncertainty};

pub const DEFAULT_MAX_STALE: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    /// Sorted dataset attribute indices (never the class).
    pub attribute_indices: Vec<usize>,
    pub merit: f64,
}

/// Feature-class and feature-feature symmetric uncertainties.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationCache {
    attributes: Vec<usize>,
    class_corr: Vec<f64>,
    /// Strict upper triangle, row-major over cache positions.
    pair_corr: Vec<f64>,
}

fn tri_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl CorrelationCache {
    /// Builds a cache from explicit values: `pair_corr(i, j)` is queried
    /// for every `i < j` over cache positions.
    pub fn from_values(
        attributes: Vec<usize>,
        class_corr: Vec<f64>,
        pair_corr: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let n = attributes.len();
        if class_corr.len() != n {
            return Err(Error::invalid("one class correlation per attribute expected"));
        }
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push(pair_corr(i, j));
            }
        }
        let all_valid = class_corr
            .iter()
            .chain(&pairs)
            .all(|v| (0.0..=1.0).contains(v));
        if !all_valid {
            return Err(Error::invalid("correlations must lie in [0, 1]"));
        }
        Ok(CorrelationCache {
            attributes,
            class_corr,
            pair_corr: pairs,
        })
    }

    pub fn attributes(&self) -> &[usize] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn position_of(&self, attribute: usize) -> Option<usize> {
        self.attributes.iter().position(|&a| a == attribute)
    }

    /// Feature-class correlation by cache position.
    pub fn r_cf(&self, pos: usize) -> f64 {
        self.class_corr[pos]
    }

    /// Feature-feature correlation by cache positions (1 on the diagonal).
    pub fn r_ff(&self, i: usize, j: usize) -> f64 {
        if i == j {
            1.0
        } else {
            self.pair_corr[tri_index(self.attributes.len(), i, j)]
        }
    }

    /// Merit of a subset given as cache positions.
    pub fn merit_of_positions(&self, positions: &[usize]) -> f64 {
        let k = positions.len();
        if k == 0 {
            return 0.0;
        }
        let r_cf: f64 = positions.iter().map(|&p| self.class_corr[p]).sum::<f64>() / k as f64;
        if k == 1 {
            return r_cf;
        }
        let mut sum_ff = 0.0;
        for (x, &i) in positions.iter().enumerate() {
            for &j in &positions[x + 1..] {
                sum_ff += self.r_ff(i, j);
            }
        }
        let pairs = (k * (k - 1) / 2) as f64;
        let r_ff = sum_ff / pairs;
        let kf = k as f64;
        kf * r_cf / (kf + kf * (kf - 1.0) * r_ff).sqrt()
    }
}

/// Discretised view of one column: nominal index or MDL bin.
fn discrete_column(d: &Dataset, attribute: usize) -> Result<Vec<Option<usize>>> {
    let column = |map: &dyn Fn(Cell) -> Option<usize>| {
        d.instances().iter().map(|i| map(i.cells[attribute])).collect()
    };
    Ok(match d.attribute(attribute).kind {
        AttributeKind::Nominal => column(&|c| c.as_nominal()),
        AttributeKind::Numeric => {
            let cuts = discretize_mdl(d, attribute)?;
            column(&|c| c.as_numeric().map(|v| cuts.bin_of(v)))
        }
    })
}

pub fn build_correlations(d: &Dataset) -> Result<CorrelationCache> {
    let attributes: Vec<usize> = d.feature_indices().collect();
    if attributes.len() < 2 {
        return Err(Error::invalid(format!(
            "correlation-based selection needs at least two attributes, found {}",
            attributes.len()
        )));
    }
    let weights = d.weights();
    let class: Vec<Option<usize>> = (0..d.len()).map(|i| d.class_of(i)).collect();
    let columns: Vec<Vec<Option<usize>>> = attributes
        .iter()
        .map(|&a| discrete_column(d, a))
        .collect::<Result<_>>()?;
    let class_corr = columns
        .iter()
        .map(|c| symmetric_uncertainty(c, &class, &weights))
        .collect::<Result<Vec<_>>>()?;

    let n = columns.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let su = |&(i, j): &(usize, usize)| symmetric_uncertainty(&columns[i], &columns[j], &weights);
    #[cfg(feature = "parallel")]
    let pair_corr: Vec<f64> = {
        use rayon::prelude::*;
        pairs.par_iter().map(su).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let pair_corr: Vec<f64> = pairs.iter().map(su).collect::<Result<_>>()?;

    Ok(CorrelationCache {
        attributes,
        class_corr,
        pair_corr,
    })
}

/// Merit of a subset of dataset attribute indices.
pub fn merit(subset: &[usize], cache: &CorrelationCache) -> Result<f64> {
    let positions = subset
        .iter()
        .map(|&a| {
            cache
                .position_of(a)
                .ok_or_else(|| Error::invalid(format!("attribute {a} is not in the cache")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cache.merit_of_positions(&positions))
}

#[derive(Clone, Debug)]
struct Node {
    positions: Vec<usize>,
    merit: f64,
}

/// Higher merit first; equal merits prefer the lexicographically smaller set.
fn rank(a: &Node, b: &Node) -> Ordering {
    b.merit
        .total_cmp(&a.merit)
        .then_with(|| a.positions.cmp(&b.positions))
}

/// Every subset the search evaluated, with its merit, in evaluation order.
pub type SearchTrace = Vec<FeatureSubset>;

pub fn best_first_search(cache: &CorrelationCache, max_stale: usize) -> FeatureSubset {
    best_first_search_traced(cache, max_stale).0
}

/// Forward best-first search from the empty set. Stops after `max_stale`
/// consecutive expansions that fail to improve the best merit.
pub fn best_first_search_traced(cache: &CorrelationCache, max_stale: usize) -> (FeatureSubset, SearchTrace) {
    let n = cache.len();
    let mut open = vec![Node {
        positions: Vec::new(),
        merit: 0.0,
    }];
    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    visited.insert(Vec::new());
    let mut best = open[0].clone();
    let mut trace = Vec::new();
    let mut stale = 0;

    while stale < max_stale.max(1) {
        open.sort_by(rank);
        if open.is_empty() {
            break;
        }
        let node = open.remove(0);
        let mut improved = false;
        for p in 0..n {
            if node.positions.contains(&p) {
                continue;
            }
            let mut child = node.positions.clone();
            child.push(p);
            child.sort_unstable();
            if !visited.insert(child.clone()) {
                continue;
            }
            let m = cache.merit_of_positions(&child);
            trace.push(to_subset(cache, &child, m));
            let candidate = Node {
                positions: child,
                merit: m,
            };
            if rank(&candidate, &best) == Ordering::Less && m > best.merit {
                best = candidate.clone();
                improved = true;
            }
            open.push(candidate);
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
        }
    }
    (to_subset(cache, &best.positions, best.merit), trace)
}

fn to_subset(cache: &CorrelationCache, positions: &[usize], merit: f64) -> FeatureSubset {
    let mut attribute_indices: Vec<usize> = positions.iter().map(|&p| cache.attributes[p]).collect();
    attribute_indices.sort_unstable();
    FeatureSubset {
        attribute_indices,
        merit,
    }
}

/// Columns kept by a subset: the selected attributes and the class, in
/// their original order.
pub fn kept_columns(d: &Dataset, subset: &FeatureSubset) -> Result<Vec<usize>> {
    for &a in &subset.attribute_indices {
        if a >= d.num_attributes() || a == d.class_index() {
            return Err(Error::invalid(format!("attribute index {a} is not a feature")));
        }
    }
    Ok((0..d.num_attributes())
        .filter(|a| *a == d.class_index() || subset.attribute_indices.contains(a))
        .collect())
}

pub fn project_instance(inst: &Instance, kept: &[usize]) -> Result<Instance> {
    let cells = kept
        .iter()
        .map(|&a| {
            inst.cells.get(a).copied().ok_or_else(|| {
                Error::Schema(format!("instance has no cell for attribute {a}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance::with_weight(cells, inst.weight))
}

/// Dataset holding only the subset's attributes plus the class column,
/// with instance order and weights preserved.
pub fn filter_dataset(d: &Dataset, subset: &FeatureSubset) -> Result<Dataset> {
    let kept = kept_columns(d, subset)?;
    let schema = kept.iter().map(|&a| d.attribute(a).clone()).collect();
    let class_index = kept
        .iter()
        .position(|&a| a == d.class_index())
        .expect("class column is always kept");
    let instances = d
        .instances()
        .iter()
        .map(|inst| project_instance(inst, &kept))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(schema, class_index, instances)
}

/// Correlations, search and projection in one step.
pub fn select_features(d: &Dataset, max_stale: usize) -> Result<FeatureSubset> {
    Ok(best_first_search(&build_correlations(d)?, max_stale))
}
