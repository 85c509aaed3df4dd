//! Structure of both pruning procedures on random trees.

mod common;

use common::{random_numeric, rng, with_missing};
use rand::Rng;
use soilcast::c45::{induce, prune_ebp, subtree_estimated_errors, C45Params};
use soilcast::cart::{cost_complexity_sequence, grow_full, select_pruned_tree, CartParams};
use soilcast::tree::TreeNode;

/// `b` is `a` with some internal nodes replaced by leaves.
fn is_pruned_subtree(a: &TreeNode, b: &TreeNode) -> bool {
    match (a, b) {
        (_, TreeNode::Leaf { dist, .. }) => dist == a.dist(),
        (
            TreeNode::Internal { test: ta, children: ca, .. },
            TreeNode::Internal { test: tb, children: cb, .. },
        ) => ta == tb && ca.len() == cb.len() && ca.iter().zip(cb).all(|(x, y)| is_pruned_subtree(x, y)),
        _ => false,
    }
}

fn resubstitution_errors(node: &TreeNode) -> f64 {
    match node {
        TreeNode::Leaf { dist, .. } => dist.errors(),
        TreeNode::Internal { children, .. } => children.iter().map(resubstitution_errors).sum(),
    }
}

#[test]
fn cost_complexity_sequences_are_nested_and_monotone() {
    let mut r = rng(5);
    for case in 0..100 {
        let n = r.random_range(20..120);
        let width = r.random_range(1..4);
        let classes = r.random_range(2..4);
        let mut d = random_numeric(&mut r, n, width, classes, 0.25);
        if case % 3 == 0 {
            d = with_missing(&d, &mut r, 0.1);
        }
        let params = CartParams { min_instances_per_leaf: 1.0, ..CartParams::default() };
        let full = grow_full(&d, &params).unwrap();
        let seq = cost_complexity_sequence(&full);
        assert_eq!(seq.alphas.len(), seq.trees.len());
        assert_eq!(seq.alphas[0], 0.0);
        assert!(seq.trees.last().unwrap().is_leaf(), "case {case}");
        assert!(is_pruned_subtree(&full, &seq.trees[0]));
        for i in 1..seq.trees.len() {
            assert!(seq.alphas[i] >= seq.alphas[i - 1], "case {case}: alphas {:?}", seq.alphas);
            assert!(seq.trees[i].num_leaves() < seq.trees[i - 1].num_leaves());
            assert!(is_pruned_subtree(&seq.trees[i - 1], &seq.trees[i]), "case {case}, step {i}");
        }
        // Each recorded tree minimises R(T) + alpha |T| within the sequence.
        let total = full.dist().total();
        let cost = |t: &TreeNode, alpha: f64| resubstitution_errors(t) / total + alpha * t.num_leaves() as f64;
        for (i, &alpha) in seq.alphas.iter().enumerate() {
            let mine = cost(&seq.trees[i], alpha);
            for t in &seq.trees {
                assert!(mine <= cost(t, alpha) + 1e-12, "case {case}: tree {i} not optimal at {alpha}");
            }
        }
    }
}

#[test]
fn stump_link_strength() {
    // Root [9, 5] split into pure [9, 0] and [0, 5].
    let rows: Vec<_> = (0..14).map(|i| (vec![usize::from(i >= 9)], usize::from(i >= 9))).collect();
    let d = common::binary_dataset(&rows, 1, 2);
    let full = grow_full(&d, &CartParams::default()).unwrap();
    let seq = cost_complexity_sequence(&full);
    assert_eq!(seq.alphas.len(), 2);
    assert_eq!(seq.alphas[0], 0.0);
    assert!((seq.alphas[1] - 5.0 / 14.0).abs() < 1e-12);
    assert!((seq.alphas[1] - 0.35714).abs() < 1e-5);
}

#[test]
fn selected_cart_tree_never_exceeds_full_tree() {
    let mut r = rng(17);
    for _ in 0..10 {
        let d = random_numeric(&mut r, 150, 2, 2, 0.2);
        let params = CartParams::default();
        let full = grow_full(&d, &params).unwrap();
        let chosen = select_pruned_tree(&d, &params).unwrap();
        assert!(chosen.num_leaves() <= full.num_leaves());
        assert!(is_pruned_subtree(&full, &chosen));
    }
}

#[test]
fn ebp_never_adds_leaves_or_estimated_error() {
    let mut r = rng(9);
    for case in 0..100 {
        let n = r.random_range(20..150);
        let (width, classes) = (r.random_range(1..4), r.random_range(2..5));
        let mut d = random_numeric(&mut r, n, width, classes, 0.3);
        if case % 4 == 0 {
            d = with_missing(&d, &mut r, 0.15);
        }
        let unpruned = induce(&d, &C45Params { pruning: false, ..C45Params::default() }).unwrap();
        for cf in [0.05, 0.25, 0.5] {
            let params = C45Params { confidence_factor: cf, ..C45Params::default() };
            let pruned = prune_ebp(&unpruned, &params).unwrap();
            assert!(pruned.num_leaves() <= unpruned.num_leaves(), "case {case}");
            assert!(is_pruned_subtree(&unpruned, &pruned), "case {case}");
            assert!(
                subtree_estimated_errors(&pruned, cf) <= subtree_estimated_errors(&unpruned, cf) + 1e-9,
                "case {case}, cf {cf}"
            );
        }
    }
}
