mod common;

use std::collections::BTreeSet;

use common::*;
use hierle::metrics::{self, EvaluationReport, Weighting};
use hierle::{NodeId, Path, Tree};
use proptest::prelude::*;

/// A tree and a list of (truth, prediction) pairs over its leaves.
fn arb_pairs() -> impl Strategy<Value = (Tree, Vec<(Path, Path)>)> {
    arb_tree().prop_flat_map(|tree| {
        let n_leaf = tree.n_leaf();
        let pairs = prop::collection::vec((0..n_leaf, 0..n_leaf), 1..20);
        (Just(tree), pairs)
    })
    .prop_map(|(tree, idx)| {
        let paths = tree.paths();
        let pairs = idx.into_iter().map(|(a, b)| (paths[a].clone(), paths[b].clone())).collect();
        (tree, pairs)
    })
}

fn below_root(p: &Path) -> BTreeSet<NodeId> {
    p.below_root().iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn all_losses_vanish_exactly_when_paths_agree((tree, pairs) in arb_pairs()) {
        let all_equal = pairs.iter().all(|(a, b)| a == b);
        let r = EvaluationReport::compute(&pairs, &tree).unwrap();
        prop_assert_eq!(r.l01 == 0.0, all_equal);
        prop_assert_eq!(r.l_delta == 0.0, all_equal);
        prop_assert_eq!(r.l_h_sib == 0.0, all_equal);
        prop_assert_eq!(r.l_h_sub == 0.0, all_equal);
        prop_assert_eq!(r.hf == 1.0, all_equal);
    }

    #[test]
    fn symmetric_difference_bounds((_tree, pairs) in arb_pairs()) {
        for pair in &pairs {
            let one = std::slice::from_ref(pair);
            let d = metrics::symmetric_loss(one).unwrap();
            let (a, b) = (below_root(&pair.0), below_root(&pair.1));
            prop_assert_eq!(d, a.symmetric_difference(&b).count() as f64);
            prop_assert!(d <= (a.len() + b.len()) as f64);
            if pair.0 != pair.1 {
                prop_assert!(d >= 2.0);
            }
        }
    }

    #[test]
    fn per_sample_hierarchical_loss_is_a_weight((tree, pairs) in arb_pairs()) {
        for w in [Weighting::Sib, Weighting::Sub] {
            for pair in &pairs {
                let v = metrics::hierarchical_loss(std::slice::from_ref(pair), &tree, w).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn order_of_samples_does_not_matter((tree, pairs) in arb_pairs()) {
        let mut rev = pairs.clone();
        rev.reverse();
        let a = EvaluationReport::compute(&pairs, &tree).unwrap();
        let b = EvaluationReport::compute(&rev, &tree).unwrap();
        for ((_, x), (_, y)) in a.fields().iter().zip(b.fields()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn hf_is_pooled_overlap((tree, pairs) in arb_pairs()) {
        let (mut overlap, mut pred, mut truth) = (0usize, 0usize, 0usize);
        for (t, p) in &pairs {
            let (t, p) = (below_root(t), below_root(p));
            overlap += t.intersection(&p).count();
            pred += p.len();
            truth += t.len();
        }
        let hf = metrics::h_fmeasure(&pairs, &tree).unwrap();
        let (hp, hr) = (overlap as f64 / pred as f64, overlap as f64 / truth as f64);
        prop_assert!((hf.precision - hp).abs() < 1e-12);
        prop_assert!((hf.recall - hr).abs() < 1e-12);
        let f = if hp + hr == 0.0 { 0.0 } else { 2.0 * hp * hr / (hp + hr) };
        prop_assert!((hf.f - f).abs() < 1e-12);
    }

    #[test]
    fn sibling_weights_split_their_parent(tree in arb_tree()) {
        let v = metrics::node_weights(&tree, Weighting::Sib);
        let top: f64 = tree.children(tree.root()).iter().map(|c| v[c.index()]).sum();
        prop_assert!((top - 1.0).abs() < 1e-12);
        let sub = metrics::node_weights(&tree, Weighting::Sub);
        for node in tree.node_order() {
            prop_assert!((sub[node.index()] - tree.subtree_size(node) as f64 / tree.q() as f64).abs() < 1e-15);
        }
    }
}

#[test]
fn hand_derived_values() {
    let tree = figure1();
    let pair = |a: &str, b: &str| vec![(tree.path_of_leaf_id(a).unwrap(), tree.path_of_leaf_id(b).unwrap())];
    let cross = pair("C1111", "C121");
    assert_eq!(metrics::symmetric_loss(&cross).unwrap(), 5.0);
    assert_eq!(metrics::symmetric_loss(&pair("C1111", "C1112")).unwrap(), 2.0);
    assert_eq!(metrics::hierarchical_loss(&cross, &tree, Weighting::Sib).unwrap(), 0.5);
    assert_eq!(metrics::hierarchical_loss(&cross, &tree, Weighting::Sub).unwrap(), 5.0 / 9.0);
    assert_eq!(metrics::h_fmeasure(&pair("C1111", "C1112"), &tree).unwrap().f, 2.0 / 3.0);
}

#[test]
fn empty_input_is_an_error() {
    let tree = figure1();
    assert!(EvaluationReport::compute(&[], &tree).is_err());
    assert!(metrics::h_fmeasure(&[], &tree).is_err());
}
