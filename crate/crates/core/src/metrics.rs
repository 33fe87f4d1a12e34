//! Evaluation measures over `(true path, predicted path)` pairs.
//!
//! The root belongs to every path and is ignored everywhere.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{NodeId, Path, Tree};

/// Node coefficients for [`hierarchical_loss`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// The root has weight 1 and each node splits its weight evenly among its children.
    Sib,
    /// Subtree size (node included) divided by `q`.
    Sub,
}

fn check_nonempty(pairs: &[(Path, Path)]) -> Result<()> {
    if pairs.is_empty() {
        Err(Error::InvalidData("no prediction pairs to evaluate".into()))
    } else {
        Ok(())
    }
}

fn check_in_tree(tree: &Tree, pairs: &[(Path, Path)]) -> Result<()> {
    for (truth, pred) in pairs {
        for path in [truth, pred] {
            if let Some(bad) = path.nodes().iter().find(|n| n.index() >= tree.len()) {
                return Err(Error::InvalidData(format!("node {bad} is outside the taxonomy")));
            }
        }
    }
    Ok(())
}

/// Fraction of pairs whose full paths differ.
pub fn zero_one_loss(pairs: &[(Path, Path)]) -> Result<f64> {
    check_nonempty(pairs)?;
    let wrong = pairs.iter().filter(|(t, p)| t != p).count();
    Ok(wrong as f64 / pairs.len() as f64)
}

fn symmetric_difference(truth: &Path, pred: &Path) -> usize {
    let a = truth.below_root();
    let b = pred.below_root();
    let common = a.iter().filter(|n| b.contains(n)).count();
    a.len() + b.len() - 2 * common
}

/// Mean size of the symmetric difference between the node sets of the two paths.
pub fn symmetric_loss(pairs: &[(Path, Path)]) -> Result<f64> {
    check_nonempty(pairs)?;
    let total: usize = pairs.iter().map(|(t, p)| symmetric_difference(t, p)).sum();
    Ok(total as f64 / pairs.len() as f64)
}

/// Coefficient of every node, indexed by [`NodeId::index`]. The root entry is 1.
pub fn node_weights(tree: &Tree, weighting: Weighting) -> Vec<f64> {
    let mut v = vec![1.0; tree.len()];
    match weighting {
        Weighting::Sib => {
            // BFS order: parents come before children.
            for node in tree.node_order() {
                let parent = tree.parent(node).expect("non-root");
                v[node.index()] = v[parent.index()] / tree.children(parent).len() as f64;
            }
        }
        Weighting::Sub => {
            let q = tree.q() as f64;
            for node in tree.node_order() {
                v[node.index()] = tree.subtree_size(node) as f64 / q;
            }
        }
    }
    v
}

/// Weight of the first node, in node order, that lies on exactly one of the
/// two paths; zero if the paths agree.
fn first_mismatch(truth: &Path, pred: &Path, weights: &[f64]) -> f64 {
    let a = truth.below_root();
    let b = pred.below_root();
    a.iter()
        .filter(|n| !b.contains(n))
        .chain(b.iter().filter(|n| !a.contains(n)))
        .min_by_key(|n| n.index())
        .map_or(0.0, |n| weights[n.index()])
}

/// Mean over pairs of `Σ_j v_j · 1{Q̂_j ≠ Q_j and Q̂_s = Q_s for all s < j}`,
/// where `Q` is the node-order indicator vector of a path. Only the first
/// disagreeing position can satisfy the condition.
pub fn hierarchical_loss(pairs: &[(Path, Path)], tree: &Tree, weighting: Weighting) -> Result<f64> {
    check_nonempty(pairs)?;
    check_in_tree(tree, pairs)?;
    let weights = node_weights(tree, weighting);
    let total: f64 = pairs.iter().map(|(t, p)| first_mismatch(t, p, &weights)).sum();
    Ok(total / pairs.len() as f64)
}

/// Path nodes together with their ancestors, root excluded.
fn augmented(tree: &Tree, path: &Path) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::new();
    for &node in path.below_root() {
        for anc in tree.path_to(node) {
            if anc != tree.root() && !out.contains(&anc) {
                out.push(anc);
            }
        }
    }
    out
}

/// Hierarchical precision, recall and F-measure, pooled over all pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalF {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

pub fn h_fmeasure(pairs: &[(Path, Path)], tree: &Tree) -> Result<HierarchicalF> {
    check_nonempty(pairs)?;
    check_in_tree(tree, pairs)?;
    let (mut inter, mut n_pred, mut n_true) = (0usize, 0usize, 0usize);
    for (truth, pred) in pairs {
        let t = augmented(tree, truth);
        let p = augmented(tree, pred);
        inter += p.iter().filter(|n| t.contains(n)).count();
        n_pred += p.len();
        n_true += t.len();
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(inter, n_pred);
    let recall = ratio(inter, n_true);
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(HierarchicalF { precision, recall, f })
}

/// Every measure on one test set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub l01: f64,
    pub l_delta: f64,
    pub l_h_sib: f64,
    pub l_h_sub: f64,
    #[serde(rename = "hP")]
    pub hp: f64,
    #[serde(rename = "hR")]
    pub hr: f64,
    #[serde(rename = "hF")]
    pub hf: f64,
    pub n_te: usize,
    /// `None` when timing is disabled so that reports are reproducible.
    pub wall_time_seconds: Option<f64>,
}

impl EvaluationReport {
    pub fn compute(pairs: &[(Path, Path)], tree: &Tree) -> Result<Self> {
        let hf = h_fmeasure(pairs, tree)?;
        Ok(EvaluationReport {
            l01: zero_one_loss(pairs)?,
            l_delta: symmetric_loss(pairs)?,
            l_h_sib: hierarchical_loss(pairs, tree, Weighting::Sib)?,
            l_h_sub: hierarchical_loss(pairs, tree, Weighting::Sub)?,
            hp: hf.precision,
            hr: hf.recall,
            hf: hf.f,
            n_te: pairs.len(),
            wall_time_seconds: None,
        })
    }

    pub fn with_wall_time(mut self, seconds: f64) -> Self {
        self.wall_time_seconds = Some(seconds);
        self
    }

    /// `(name, value)` for each numeric field, in display order.
    pub fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("l01", self.l01),
            ("l_delta", self.l_delta),
            ("l_h_sib", self.l_h_sib),
            ("l_h_sub", self.l_h_sub),
            ("hP", self.hp),
            ("hR", self.hr),
            ("hF", self.hf),
        ]
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in self.fields() {
            writeln!(f, "{name:<18} {value:>10.6}")?;
        }
        writeln!(f, "{:<18} {:>10}", "n_te", self.n_te)?;
        match self.wall_time_seconds {
            Some(t) => writeln!(f, "{:<18} {:>10.3}", "wall_time_seconds", t),
            None => writeln!(f, "{:<18} {:>10}", "wall_time_seconds", "-"),
        }
    }
}
