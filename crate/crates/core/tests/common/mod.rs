//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use hierle::{EmbeddedTree, LabeledDataset, NodeId, Tree};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const FIGURE1: &str = "\
C1: C11 C12
C11: C111 C112
C12: C121 C122 C123
C111: C1111 C1112
";

/// Node order of [`FIGURE1`].
pub const FIGURE1_ORDER: [&str; 9] = [
    "C11", "C12", "C111", "C112", "C121", "C122", "C123", "C1111", "C1112",
];

pub fn figure1() -> Tree {
    Tree::parse(FIGURE1).unwrap()
}

pub fn figure1_space() -> EmbeddedTree {
    EmbeddedTree::with_defaults(figure1()).unwrap()
}

/// Embedding of the example taxonomy at `T¹ = 1`, `δ = √5`; one column per
/// node in [`FIGURE1_ORDER`].
pub fn figure1_embedding() -> DMatrix<f64> {
    let s5 = 5f64.sqrt();
    let s15 = 15f64.sqrt();
    #[rustfmt::skip]
    let rows = [
        -1.0, 1.0, -1.0, -1.0, 1.0, 1.0, 1.0, -1.0, -1.0,
        0.0, 0.0, -s5 / 5.0, s5 / 5.0, 0.0, 0.0, 0.0, -s5 / 5.0, -s5 / 5.0,
        0.0, 0.0, 0.0, 0.0, -s15 / 10.0, s15 / 10.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, -s5 / 10.0, -s5 / 10.0, s5 / 5.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.2, 0.2,
    ];
    DMatrix::from_row_slice(5, 9, &rows)
}

/// Pairwise distances of [`figure1_embedding`], same ordering.
pub fn figure1_distances() -> DMatrix<f64> {
    let r = |k: f64| k.sqrt() / 5.0;
    let upper: [&[f64]; 8] = [
        &[2.0, r(5.0), r(5.0), r(105.0), r(105.0), r(105.0), r(6.0), r(6.0)],
        &[r(105.0), r(105.0), r(5.0), r(5.0), r(5.0), r(106.0), r(106.0)],
        &[2.0 * r(5.0), r(110.0), r(110.0), r(110.0), 0.2, 0.2],
        &[r(110.0), r(110.0), r(110.0), r(21.0), r(21.0)],
        &[r(15.0), r(15.0), r(111.0), r(111.0)],
        &[r(15.0), r(111.0), r(111.0)],
        &[r(111.0), r(111.0)],
        &[0.4],
    ];
    let mut d = DMatrix::zeros(9, 9);
    for (i, row) in upper.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let j = i + 1 + k;
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Six equidistant unit-norm points in `R⁵`, one per column.
pub fn six_point_simplex() -> DMatrix<f64> {
    let s15 = 15f64.sqrt() / 5.0;
    let s5 = 5f64.sqrt() / 5.0;
    let s10 = 10f64.sqrt() / 10.0;
    let s6 = 6f64.sqrt() / 10.0;
    #[rustfmt::skip]
    let rows = [
        -s15, s15, 0.0, 0.0, 0.0, 0.0,
        -s5, -s5, 2.0 * s5, 0.0, 0.0, 0.0,
        -s10, -s10, -s10, 3.0 * s10, 0.0, 0.0,
        -s6, -s6, -s6, -s6, 4.0 * s6, 0.0,
        -0.2, -0.2, -0.2, -0.2, -0.2, 1.0,
    ];
    DMatrix::from_row_slice(5, 6, &rows)
}

/// Random taxonomy document: every internal node has 2–`max_branch`
/// children, and a child becomes internal with probability ½ while the
/// depth (root included) stays within `max_layers`.
pub fn random_tree_doc(seed: u64, max_layers: usize, max_branch: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc = String::new();
    let mut next = 1usize;
    let mut frontier = vec![(0usize, 1usize)];
    while let Some((node, layer)) = frontier.pop() {
        let width = rng.random_range(2..=max_branch);
        doc.push_str(&format!("n{node}:"));
        for _ in 0..width {
            let child = next;
            next += 1;
            doc.push_str(&format!(" n{child}"));
            if layer + 1 < max_layers && rng.random_bool(0.5) {
                frontier.push((child, layer + 1));
            }
        }
        doc.push('\n');
    }
    doc
}

pub fn random_tree(seed: u64) -> Tree {
    Tree::parse(&random_tree_doc(seed, 5, 4)).unwrap()
}

/// Trees of depth at most 5 with branching 2–4.
pub fn arb_tree() -> impl Strategy<Value = Tree> {
    any::<u64>().prop_map(random_tree)
}

/// Gaussian features with labels drawn uniformly over leaves.
pub fn random_dataset(tree: &Tree, rng: &mut ChaCha8Rng, n: usize, p: usize) -> LabeledDataset {
    let leaves = tree.leaves();
    let labels: Vec<NodeId> = (0..n).map(|_| leaves[rng.random_range(0..leaves.len())]).collect();
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    LabeledDataset::new(tree, x, labels).unwrap()
}

/// `(lead, x)` where `lead` is 1 with an intercept and 0 without.
pub fn design(data: &LabeledDataset, i: usize, intercept: bool) -> DVector<f64> {
    let mut v = DVector::zeros(data.p() + 1);
    v[0] = if intercept { 1.0 } else { 0.0 };
    for (j, x) in data.row(i).into_iter().enumerate() {
        v[j + 1] = x;
    }
    v
}

/// Distinct layer-`m` nodes of the paths that agree with `path` above layer
/// `m` and leave it at layer `m`, found by enumerating every root-to-leaf
/// path.
pub fn representatives(tree: &Tree, path: &[NodeId], m: usize) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for other in tree.paths() {
        let nodes = other.nodes();
        if nodes.len() < m || nodes[..m - 1] != path[..m - 1] {
            continue;
        }
        if nodes[m - 1] != path[m - 1] {
            out.insert(nodes[m - 1]);
        }
    }
    out
}

/// `n⁻¹ Σ w_i Σ_m Σ_rep ℓ(⟨f, ξ_true⟩ − ⟨f, ξ_rep⟩) + λ‖A‖²`, written from
/// path enumeration rather than sibling lists.
pub fn brute_objective(
    space: &EmbeddedTree,
    data: &LabeledDataset,
    coef: &DMatrix<f64>,
    loss: impl Fn(f64) -> f64,
    lambda: f64,
    weights: Option<&[f64]>,
    intercept: bool,
) -> f64 {
    let tree = space.tree();
    let mut total = 0.0;
    for i in 0..data.n() {
        let f = coef * design(data, i, intercept);
        let path = tree.path_of_leaf(data.labels()[i]).unwrap();
        let nodes = path.nodes();
        let mut v = 0.0;
        for m in 2..=nodes.len() {
            let own = f.dot(space.point(nodes[m - 1]));
            for rep in representatives(tree, nodes, m) {
                v += loss(own - f.dot(space.point(rep)));
            }
        }
        total += weights.map_or(1.0, |w| w[i]) * v;
    }
    total / data.n() as f64 + lambda * coef.norm_squared()
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: &dyn Fn(&DMatrix<f64>) -> f64, at: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(at.nrows(), at.ncols());
    let mut probe = at.clone();
    for j in 0..at.ncols() {
        for i in 0..at.nrows() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + h;
            let up = f(&probe);
            probe[(i, j)] = orig - h;
            let down = f(&probe);
            probe[(i, j)] = orig;
            g[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    g
}

/// Fixed-step gradient descent on finite-difference gradients, stopping
/// once the update falls below `tol` in Frobenius norm.
pub fn gd_minimize(
    f: &dyn Fn(&DMatrix<f64>) -> f64,
    start: DMatrix<f64>,
    step: f64,
    tol: f64,
    max_iter: usize,
) -> DMatrix<f64> {
    let mut a = start;
    for _ in 0..max_iter {
        let update = fd_gradient(f, &a, 1e-3) * step;
        a -= &update;
        if update.norm() < tol {
            break;
        }
    }
    a
}
