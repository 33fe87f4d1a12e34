//! Tree dissimilarity built from parent-child and sibling edge weights.
//!
//! Parent-child edges leaving layer `m` weigh `ω_m`, with `ω_{m+1} = ω_m / δ`.
//! Sibling edges under a parent with `N` children weigh
//! `ψ = ω_m · sqrt(2N / (N − 1))`, which is the only choice for which the
//! label embedding is an exact isometry. The dissimilarity of two nodes is the
//! root-sum-of-squares of the weights along the fewest-hop path between them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hierarchy::{NodeId, Tree};

/// Absolute tolerance used when testing the equalities of the symmetric
/// property.
pub const HS_TOLERANCE: f64 = 1e-10;

/// Default parent-child weight of the top layer.
pub const DEFAULT_OMEGA1: f64 = 1.0;

/// Default layer decay, `δ = √5`.
pub fn default_delta() -> f64 {
    5f64.sqrt()
}

/// Smallest `δ²` for which the hierarchical and symmetric properties are
/// guaranteed: `2√2 + 2`.
pub fn hs_delta_squared_bound() -> f64 {
    2.0 * 2f64.sqrt() + 2.0
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 1.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "delta must be a finite number > 1, got {delta}"
        )))
    }
}

/// Per-layer `ω` and per-parent `ψ` constants.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSchedule {
    omega: Vec<f64>,
    delta: f64,
    psi: Vec<Option<f64>>,
}

impl WeightSchedule {
    /// Builds `ω_1, …, ω_{k−1}` geometrically and sets each internal node's
    /// sibling weight from its child count.
    pub fn build(tree: &Tree, omega1: f64, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if !(omega1 > 0.0 && omega1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega1 must be positive, got {omega1}"
            )));
        }
        let mut omega = Vec::with_capacity(tree.depth().saturating_sub(1));
        let mut w = omega1;
        for _ in 1..tree.depth() {
            omega.push(w);
            w /= delta;
        }
        let psi = tree
            .nodes()
            .map(|node| {
                let count = tree.children(node).len();
                (count >= 2).then(|| {
                    let n = count as f64;
                    omega[tree.layer(node) - 1] * (2.0 * n / (n - 1.0)).sqrt()
                })
            })
            .collect();
        Ok(WeightSchedule { omega, delta, psi })
    }

    /// `ω_m` for `1 ≤ m ≤ k − 1`: the weight of edges from layer `m` to `m + 1`.
    pub fn omega(&self, m: usize) -> f64 {
        self.omega[m - 1]
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    pub fn omega1(&self) -> f64 {
        self.omega[0]
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Sibling weight among the children of `parent`; `None` for leaves.
    pub fn psi(&self, parent: NodeId) -> Option<f64> {
        self.psi[parent.index()]
    }

    /// Whether `δ² ≥ 2√2 + 2`.
    pub fn meets_hs_condition(&self) -> bool {
        self.delta * self.delta >= hs_delta_squared_bound() - 1e-15
    }

    /// Dissimilarity between two non-root nodes, in closed form.
    pub fn dissimilarity(&self, tree: &Tree, a: NodeId, b: NodeId) -> Result<f64> {
        if a == tree.root() || b == tree.root() {
            return Err(Error::InvalidParameter(
                "the root has no dissimilarity to other nodes".into(),
            ));
        }
        Ok(self.dissimilarity_unchecked(tree, a, b))
    }

    pub fn dissimilarity_by_id(&self, tree: &Tree, a: &str, b: &str) -> Result<f64> {
        self.dissimilarity(tree, tree.node(a)?, tree.node(b)?)
    }

    pub(crate) fn dissimilarity_unchecked(&self, tree: &Tree, a: NodeId, b: NodeId) -> f64 {
        let lca = tree.lca(a, b);
        let t = tree.layer(lca);
        let (m, l) = (tree.layer(a), tree.layer(b));
        // Σ_{i=from}^{to} ω_i², empty when from > to
        let sq = |from: usize, to: usize| -> f64 { (from..=to).map(|i| self.omega(i).powi(2)).sum() };
        if t == m.min(l) {
            sq(t, m.max(l) - 1).sqrt()
        } else {
            // ψ² + Σ_{i=1}^{m−1} ω_i² + Σ_{i=1}^{l−1} ω_i² − 2 Σ_{i=1}^{t} ω_i²,
            // with the common prefix cancelled up front.
            let psi = self.psi(lca).expect("a common ancestor has children");
            (psi * psi + sq(t + 1, m - 1) + sq(t + 1, l - 1)).sqrt()
        }
    }

    /// Exhaustive check of the hierarchical and symmetric properties.
    pub fn check_hs(&self, tree: &Tree) -> HsReport {
        hs_report(tree, |a, b| self.dissimilarity_unchecked(tree, a, b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum HsViolation {
    /// A pair with a shallower common ancestor is not strictly farther apart
    /// than a pair with a deeper one.
    Hierarchical {
        shallow_pair: (String, String),
        shallow_llca: usize,
        shallow_value: f64,
        deep_pair: (String, String),
        deep_llca: usize,
        deep_value: f64,
    },
    /// Two nodes on one layer sharing the same common-ancestor layer with an
    /// anchor sit at different distances from it.
    Symmetric {
        anchor: String,
        first: String,
        second: String,
        llca: usize,
        first_value: f64,
        second_value: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct HsReport {
    pub pairs_checked: usize,
    pub violations: Vec<HsViolation>,
}

impl HsReport {
    pub fn is_certified(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks both properties for an arbitrary distance over the non-root nodes.
///
/// The hierarchical property is tested per LLCA level: the closest pair with
/// a shallow common ancestor must be strictly farther apart than the farthest
/// pair with any deeper one. The symmetric property groups, for every anchor,
/// the other nodes by `(layer, llca)` and requires equal distances within a
/// group up to [`HS_TOLERANCE`].
pub fn hs_report<F>(tree: &Tree, dist: F) -> HsReport
where
    F: Fn(NodeId, NodeId) -> f64,
{
    let nodes: Vec<NodeId> = tree.node_order().collect();
    let name = |n: NodeId| tree.id(n).to_owned();

    // llca -> (min value, argmin, max value, argmax)
    type Extremes = (f64, (NodeId, NodeId), f64, (NodeId, NodeId));
    let mut levels: BTreeMap<usize, Extremes> = BTreeMap::new();
    let mut violations = Vec::new();
    let mut pairs = 0usize;

    for (i, &a) in nodes.iter().enumerate() {
        // (layer of b, llca) -> (min, argmin, max, argmax)
        let mut groups: BTreeMap<(usize, usize), (f64, NodeId, f64, NodeId)> = BTreeMap::new();
        for (j, &b) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = dist(a, b);
            let t = tree.llca(a, b);
            let g = groups
                .entry((tree.layer(b), t))
                .or_insert((f64::INFINITY, b, f64::NEG_INFINITY, b));
            if d < g.0 {
                g.0 = d;
                g.1 = b;
            }
            if d > g.2 {
                g.2 = d;
                g.3 = b;
            }
            if j > i {
                pairs += 1;
                let e = levels
                    .entry(t)
                    .or_insert((f64::INFINITY, (a, b), f64::NEG_INFINITY, (a, b)));
                if d < e.0 {
                    e.0 = d;
                    e.1 = (a, b);
                }
                if d > e.2 {
                    e.2 = d;
                    e.3 = (a, b);
                }
            }
        }
        for (&(_, t), &(lo, lo_node, hi, hi_node)) in &groups {
            if hi - lo > HS_TOLERANCE {
                violations.push(HsViolation::Symmetric {
                    anchor: name(a),
                    first: name(lo_node),
                    second: name(hi_node),
                    llca: t,
                    first_value: lo,
                    second_value: hi,
                });
            }
        }
    }

    let levels: Vec<(usize, Extremes)> = levels.into_iter().collect();
    for (x, &(shallow_t, (lo, lo_pair, _, _))) in levels.iter().enumerate() {
        for &(deep_t, (_, _, hi, hi_pair)) in &levels[x + 1..] {
            if lo <= hi + HS_TOLERANCE {
                violations.push(HsViolation::Hierarchical {
                    shallow_pair: (name(lo_pair.0), name(lo_pair.1)),
                    shallow_llca: shallow_t,
                    shallow_value: lo,
                    deep_pair: (name(hi_pair.0), name(hi_pair.1)),
                    deep_llca: deep_t,
                    deep_value: hi,
                });
            }
        }
    }

    HsReport {
        pairs_checked: pairs,
        violations,
    }
}
