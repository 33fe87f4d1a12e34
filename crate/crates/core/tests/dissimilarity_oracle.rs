//! The closed-form dissimilarity against a shortest-path search over the
//! weighted parent/child and sibling graph.

mod common;

use std::collections::VecDeque;

use common::*;
use hierle::dissimilarity::{default_delta, hs_delta_squared_bound, WeightSchedule};
use hierle::{NodeId, Tree};
use proptest::prelude::*;

/// Edges `(neighbour, weight)` per node: ω between a layer-`m` parent and
/// its children, ψ between any two children of the same parent.
fn graph(tree: &Tree, omega1: f64, delta: f64) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); tree.len()];
    for parent in tree.nodes() {
        let kids = tree.children(parent);
        if kids.is_empty() {
            continue;
        }
        let m = tree.layer(parent);
        let omega = omega1 / delta.powi(m as i32 - 1);
        let n = kids.len() as f64;
        let psi = omega * (2.0 * n / (n - 1.0)).sqrt();
        for (i, &a) in kids.iter().enumerate() {
            adj[parent.index()].push((a.index(), omega));
            adj[a.index()].push((parent.index(), omega));
            for &b in &kids[i + 1..] {
                adj[a.index()].push((b.index(), psi));
                adj[b.index()].push((a.index(), psi));
            }
        }
    }
    adj
}

/// Square root of the summed squared weights along a minimum-hop path,
/// taking the smallest such sum when several paths tie on hops.
fn path_min(adj: &[Vec<(usize, f64)>], from: NodeId, to: NodeId) -> f64 {
    let n = adj.len();
    let mut hops = vec![usize::MAX; n];
    let mut cost = vec![f64::INFINITY; n];
    hops[from.index()] = 0;
    cost[from.index()] = 0.0;
    let mut queue = VecDeque::from([from.index()]);
    while let Some(u) = queue.pop_front() {
        for &(v, w) in &adj[u] {
            let h = hops[u] + 1;
            let c = cost[u] + w * w;
            if h < hops[v] {
                hops[v] = h;
                cost[v] = c;
                queue.push_back(v);
            } else if h == hops[v] && c < cost[v] {
                cost[v] = c;
            }
        }
    }
    cost[to.index()].sqrt()
}

fn max_disagreement(tree: &Tree, omega1: f64, delta: f64) -> f64 {
    let sched = WeightSchedule::build(tree, omega1, delta).unwrap();
    let adj = graph(tree, omega1, delta);
    let nodes: Vec<NodeId> = tree.node_order().collect();
    let mut worst: f64 = 0.0;
    for &a in &nodes {
        for &b in &nodes {
            let closed = sched.dissimilarity(tree, a, b).unwrap();
            worst = worst.max((closed - path_min(&adj, a, b)).abs());
        }
    }
    worst
}

#[test]
fn figure1_matches_graph_search() {
    assert!(max_disagreement(&figure1(), 1.0, default_delta()) < 1e-12);
}

#[test]
fn worked_pair_from_the_example() {
    // Four hops: up twice, across the top siblings, down once.
    let tree = figure1();
    let sched = WeightSchedule::build(&tree, 1.0, default_delta()).unwrap();
    let (w1, w2, w3) = (1.0f64, 1.0 / 5f64.sqrt(), 0.2);
    let psi1 = 2.0 * w1;
    let want = (psi1 * psi1 + 2.0 * w2 * w2 + w3 * w3).sqrt();
    let got = sched.dissimilarity_by_id(&tree, "C1111", "C121").unwrap();
    assert!((got - want).abs() < 1e-15);
}

#[test]
fn self_dissimilarity_is_zero_and_root_is_rejected() {
    let tree = figure1();
    let sched = WeightSchedule::build(&tree, 1.0, default_delta()).unwrap();
    for node in tree.node_order() {
        assert_eq!(sched.dissimilarity(&tree, node, node).unwrap(), 0.0);
    }
    let root = tree.root();
    assert!(sched.dissimilarity(&tree, root, tree.node("C11").unwrap()).is_err());
}

#[test]
fn hs_bound_separates_certified_schedules() {
    let tree = random_tree(3);
    let bound = hs_delta_squared_bound().sqrt();
    let ok = WeightSchedule::build(&tree, 1.0, bound + 1e-6).unwrap();
    assert!(ok.meets_hs_condition());
    assert!(ok.check_hs(&tree).is_certified());
    let weak = WeightSchedule::build(&tree, 1.0, 1.5).unwrap();
    assert!(!weak.meets_hs_condition());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_matches_graph_search(tree in arb_tree(), omega1 in 0.1f64..10.0, delta in 1.1f64..4.0) {
        prop_assert!(max_disagreement(&tree, omega1, delta) < 1e-12 * omega1.max(1.0));
    }

    #[test]
    fn symmetric_and_positive(tree in arb_tree()) {
        let sched = WeightSchedule::build(&tree, 1.0, default_delta()).unwrap();
        let nodes: Vec<NodeId> = tree.node_order().collect();
        for &a in &nodes {
            for &b in &nodes {
                let ab = sched.dissimilarity(&tree, a, b).unwrap();
                prop_assert_eq!(ab, sched.dissimilarity(&tree, b, a).unwrap());
                prop_assert_eq!(ab == 0.0, a == b);
            }
        }
    }

    #[test]
    fn default_delta_is_certified(tree in arb_tree()) {
        let sched = WeightSchedule::build(&tree, 1.0, default_delta()).unwrap();
        prop_assert!(sched.meets_hs_condition());
        let report = sched.check_hs(&tree);
        prop_assert!(report.is_certified(), "{:?}", report.violations.first());
    }
}
