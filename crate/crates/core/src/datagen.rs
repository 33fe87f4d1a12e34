//! Seeded synthetic taxonomies and datasets.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded with a `u64`; Gaussian
//! noise uses the ziggurat sampler of `rand_distr::StandardNormal`. A seed
//! fully determines the output of a given build.
//!
//! Node ids in the generated trees are their node-order indices: the root is
//! `0` and the remaining nodes are numbered `1..=q` layer by layer.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classifier::LabeledDataset;
use crate::embedding::EmbeddedTree;
use crate::error::{Error, Result};
use crate::hierarchy::{NodeId, Tree};

/// Per-coordinate noise variance of both simulation designs.
pub const NOISE_VARIANCE: f64 = 0.1;

/// Fraction of relabelled samples in the first design.
pub const DEFAULT_NOISE_RATE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "example", rename_all = "lowercase")]
pub enum Example {
    /// Four top nodes, binary below, `depth` layers counting the root;
    /// class means on node-indicator coordinates.
    One { depth: usize },
    /// Twelve top nodes, binary below, five layers; class means at the
    /// embedded leaf points.
    Two,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub example: Example,
    pub p: usize,
    pub n_total: usize,
    pub noise_rate: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn example1(depth: usize, p: usize, n_total: usize, seed: u64) -> Self {
        SyntheticSpec {
            example: Example::One { depth },
            p,
            n_total,
            noise_rate: DEFAULT_NOISE_RATE,
            seed,
        }
    }

    pub fn example2(n_total: usize, seed: u64) -> Self {
        SyntheticSpec {
            example: Example::Two,
            p: 95,
            n_total,
            noise_rate: 0.0,
            seed,
        }
    }

    pub fn generate(&self) -> Result<Synthetic> {
        match self.example {
            Example::One { .. } => gen_example1(self),
            Example::Two => gen_example2(self),
        }
    }
}

/// Generated taxonomy, samples, and the rows whose labels were resampled.
#[derive(Clone, Debug)]
pub struct Synthetic {
    pub tree: Tree,
    pub data: LabeledDataset,
    pub relabeled: Vec<usize>,
}

/// Root `0` with `top` children, every other internal node binary, `layers`
/// layers in total (root included).
pub fn balanced_tree(top: usize, layers: usize) -> Result<Tree> {
    if top < 2 || layers < 2 {
        return Err(Error::InvalidParameter(
            "a balanced tree needs at least two top nodes and two layers".into(),
        ));
    }
    let mut doc = String::new();
    let mut next = 1usize;
    let mut frontier = vec![0usize];
    for layer in 1..layers {
        let mut below = Vec::new();
        for &node in &frontier {
            let width = if layer == 1 { top } else { 2 };
            let kids: Vec<usize> = (next..next + width).collect();
            next += width;
            doc.push_str(&format!("{node}:"));
            for k in &kids {
                doc.push_str(&format!(" {k}"));
            }
            doc.push('\n');
            below.extend(kids);
        }
        frontier = below;
    }
    Ok(Tree::parse(&doc)?)
}

pub fn example1_tree(depth: usize) -> Result<Tree> {
    balanced_tree(4, depth)
}

pub fn example2_tree() -> Tree {
    balanced_tree(12, 5).expect("fixed design")
}

/// Mean of the first design for a leaf: coordinate `index(node) − 1` is
/// `1/(m − 1)` for each node at layer `m` on the path.
pub fn example1_mean(tree: &Tree, leaf: NodeId, p: usize) -> Result<Vec<f64>> {
    if p < tree.q() {
        return Err(Error::InvalidParameter(format!(
            "p = {p} is smaller than the number of non-root nodes ({})",
            tree.q()
        )));
    }
    let mut mu = vec![0.0; p];
    for &node in tree.path_of_leaf(leaf)?.below_root() {
        mu[node.index() - 1] = 1.0 / (tree.layer(node) - 1) as f64;
    }
    Ok(mu)
}

fn check_noise(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("noise rate {rate} is outside [0, 1)")))
    }
}

/// Draws labels uniformly over leaves and rows `mean(label) + N(0, σ²I)`.
fn sample(
    tree: &Tree,
    rng: &mut ChaCha8Rng,
    n: usize,
    p: usize,
    mean: impl Fn(NodeId) -> Vec<f64>,
) -> (DMatrix<f64>, Vec<NodeId>) {
    let sd = NOISE_VARIANCE.sqrt();
    let leaves = tree.leaves();
    let means: Vec<Vec<f64>> = leaves.iter().map(|&l| mean(l)).collect();
    let mut x = DMatrix::zeros(n, p);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = rng.random_range(0..leaves.len());
        labels.push(leaves[k]);
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            x[(i, j)] = means[k][j] + sd * z;
        }
    }
    (x, labels)
}

/// Resamples the labels of `round(rate·n)` distinct rows uniformly over all
/// leaves. Returns the chosen rows in ascending order.
fn relabel(tree: &Tree, rng: &mut ChaCha8Rng, labels: &mut [NodeId], rate: f64) -> Vec<usize> {
    let n = labels.len();
    let amount = ((rate * n as f64).round() as usize).min(n);
    let mut rows = index::sample(rng, n, amount).into_vec();
    rows.sort_unstable();
    let leaves = tree.leaves();
    for &i in &rows {
        labels[i] = leaves[rng.random_range(0..leaves.len())];
    }
    rows
}

pub fn gen_example1(spec: &SyntheticSpec) -> Result<Synthetic> {
    let Example::One { depth } = spec.example else {
        return Err(Error::InvalidParameter("expected the first design".into()));
    };
    check_noise(spec.noise_rate)?;
    let tree = example1_tree(depth)?;
    if spec.p < tree.q() {
        return Err(Error::InvalidParameter(format!(
            "p = {} is smaller than the number of non-root nodes ({})",
            spec.p,
            tree.q()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (x, mut labels) = sample(&tree, &mut rng, spec.n_total, spec.p, |leaf| {
        example1_mean(&tree, leaf, spec.p).expect("p checked")
    });
    let relabeled = relabel(&tree, &mut rng, &mut labels, spec.noise_rate);
    let data = LabeledDataset::new(&tree, x, labels)?;
    Ok(Synthetic { tree, data, relabeled })
}

pub fn gen_example2(spec: &SyntheticSpec) -> Result<Synthetic> {
    if spec.example != Example::Two {
        return Err(Error::InvalidParameter("expected the second design".into()));
    }
    check_noise(spec.noise_rate)?;
    let tree = example2_tree();
    let space = EmbeddedTree::with_defaults(tree)?;
    if spec.p != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: spec.p,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (x, mut labels) = sample(space.tree(), &mut rng, spec.n_total, spec.p, |leaf| {
        space.point(leaf).iter().copied().collect()
    });
    let relabeled = relabel(space.tree(), &mut rng, &mut labels, spec.noise_rate);
    let data = LabeledDataset::new(space.tree(), x, labels)?;
    Ok(Synthetic {
        tree: space.tree().clone(),
        data,
        relabeled,
    })
}

/// Splits rows contiguously into train, validation and test blocks of
/// relative sizes 1:1:2.
pub fn split_1_1_2(data: &LabeledDataset) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let n = data.n();
    let block = n / 4;
    if block == 0 {
        return Err(Error::InvalidData(format!("{n} rows are too few for a 1:1:2 split")));
    }
    Ok((
        data.slice(0..block),
        data.slice(block..2 * block),
        data.slice(2 * block..n),
    ))
}

/// Seed of replication `rep`: the first word of ChaCha stream `rep` under
/// the master seed.
pub fn replication_seed(master: u64, rep: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(rep);
    rng.next_u64()
}
