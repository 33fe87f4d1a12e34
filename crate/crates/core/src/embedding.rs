//! Exact label embedding.
//!
//! Every non-root node is mapped to a point in `R^K` with `K = n_leaf − 1`.
//! The children of each internal node receive a regular simplex, scaled to
//! the layer's norm `T^(m)`, in a block of coordinates that no other parent
//! uses; a child's point is its parent's point plus its simplex vertex. The
//! resulting Euclidean distances equal the tree dissimilarity exactly when
//! the top-layer norm equals `ω_1` and both share the same `δ`.

use std::ops::Range;

use nalgebra::DVector;
use serde::ser::{SerializeMap, Serializer};

use crate::dissimilarity::{check_delta, hs_report, HsReport, WeightSchedule};
use crate::error::{Error, Result};
use crate::hierarchy::{NodeId, Tree};

/// `count` points with pairwise distance `c` spanning `R^{count−1}`, centred
/// at the origin.
///
/// The first point starts on the negative side of the first axis; each new
/// point is placed above the centroid of the previous ones at height
/// `sqrt(c² − d²)`, where `d` is the centroid-to-vertex distance so far.
pub fn simplex_unscaled(count: usize, c: f64) -> Result<Vec<DVector<f64>>> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!(
            "a simplex needs at least 2 points, got {count}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "the edge length must be positive, got {c}"
        )));
    }
    let dim = count - 1;
    let mut points = vec![DVector::zeros(dim); count];
    points[0][0] = -c / 2.0;
    points[1][0] = c / 2.0;
    for m in 2..count {
        // Points 0..m live in the first m−1 coordinates.
        let centroid = points[..m]
            .iter()
            .fold(DVector::zeros(dim), |acc, p| acc + p)
            / m as f64;
        let d = (&centroid - &points[m - 1]).norm();
        let mut next = centroid;
        next[m - 1] = (c * c - d * d).sqrt();
        points[m] = next;
    }
    let centroid = points.iter().fold(DVector::zeros(dim), |acc, p| acc + p) / count as f64;
    for p in &mut points {
        *p -= &centroid;
    }
    Ok(points)
}

/// Norm of every vertex of [`simplex_unscaled`]: `c · sqrt((n − 1) / (2n))`.
pub fn simplex_vertex_norm(count: usize, c: f64) -> f64 {
    let n = count as f64;
    c * ((n - 1.0) / (2.0 * n)).sqrt()
}

/// Pairwise distance between vertices of a simplex of vertex norm `norm`.
pub fn simplex_edge(count: usize, norm: f64) -> f64 {
    let n = count as f64;
    norm * (2.0 * n / (n - 1.0)).sqrt()
}

/// `count` equidistant points of norm `norm` embedded in `R^ambient`,
/// supported on coordinates `offset..offset + count − 1` (0-based).
pub fn simplex(count: usize, norm: f64, offset: usize, ambient: usize) -> Result<Vec<DVector<f64>>> {
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "the simplex norm must be positive, got {norm}"
        )));
    }
    if count >= 1 && ambient < offset + count - 1 {
        return Err(Error::InvalidParameter(format!(
            "{count} points at offset {offset} need {} coordinates, only {ambient} available",
            offset + count - 1
        )));
    }
    let base = simplex_unscaled(count, 1.0)?;
    let scale = norm / simplex_vertex_norm(count, 1.0);
    Ok(base
        .into_iter()
        .map(|p| {
            let mut v = DVector::zeros(ambient);
            v.rows_mut(offset, count - 1).copy_from(&(p * scale));
            v
        })
        .collect())
}

/// Points for every non-root node of a tree.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    t1: f64,
    delta: f64,
    xi: Vec<DVector<f64>>,
    eta: Vec<DVector<f64>>,
    layer_norms: Vec<f64>,
    blocks: Vec<Option<Range<usize>>>,
    layer_dims: Vec<usize>,
}

impl EmbeddingTable {
    /// Builds the embedding layer by layer.
    ///
    /// Parents are processed in node order, so each layer's blocks are laid
    /// out left to right right after the previous layer's coordinates.
    pub fn build(tree: &Tree, t1: f64, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if !(t1 > 0.0 && t1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "the top-layer norm must be positive, got {t1}"
            )));
        }
        let dim = tree.n_leaf() - 1;
        let mut xi = vec![DVector::zeros(dim); tree.len()];
        let mut eta = vec![DVector::zeros(dim); tree.len()];
        let mut blocks = vec![None; tree.len()];
        let mut layer_norms = Vec::with_capacity(tree.depth().saturating_sub(1));
        let mut norm = t1;
        for _ in 1..tree.depth() {
            layer_norms.push(norm);
            norm /= delta;
        }

        let mut layer_dims = Vec::with_capacity(tree.depth().saturating_sub(1));
        let mut offset = 0;
        let mut current_layer = 1;
        for parent in tree.nodes().filter(|&n| !tree.is_leaf(n)) {
            let layer = tree.layer(parent);
            if layer != current_layer {
                layer_dims.push(offset);
                current_layer = layer;
            }
            let children = tree.children(parent);
            let points = simplex(children.len(), layer_norms[layer - 1], offset, dim)?;
            for (&child, point) in children.iter().zip(points) {
                xi[child.index()] = &xi[parent.index()] + &point;
                eta[child.index()] = point;
            }
            blocks[parent.index()] = Some(offset..offset + children.len() - 1);
            offset += children.len() - 1;
        }
        layer_dims.push(offset);
        debug_assert_eq!(offset, dim);

        Ok(EmbeddingTable {
            dim,
            t1,
            delta,
            xi,
            eta,
            layer_norms,
            blocks,
            layer_dims,
        })
    }

    /// Embedding dimension `K`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Point of `node`; the root maps to the origin.
    pub fn point(&self, node: NodeId) -> &DVector<f64> {
        &self.xi[node.index()]
    }

    /// Offset of `node` from its parent's point.
    pub fn offset(&self, node: NodeId) -> &DVector<f64> {
        &self.eta[node.index()]
    }

    /// `T^(1), …, T^(k−1)`: the norm of the offsets of children at layer `m + 1`.
    pub fn layer_norms(&self) -> &[f64] {
        &self.layer_norms
    }

    /// Coordinate range holding the offsets of `parent`'s children.
    pub fn block(&self, parent: NodeId) -> Option<Range<usize>> {
        self.blocks[parent.index()].clone()
    }

    /// `D_2, …, D_k`: number of coordinates in use after each layer.
    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        (self.point(a) - self.point(b)).norm()
    }

    /// Largest `|s(a, b) − (ω_1/T^(1))·d_E(a, b)|` over all non-root pairs.
    pub fn verify_isometry(&self, tree: &Tree, sched: &WeightSchedule) -> Result<f64> {
        if (sched.delta() - self.delta).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "schedule delta {} differs from embedding delta {}",
                sched.delta(),
                self.delta
            )));
        }
        if tree.len() != self.xi.len() {
            return Err(Error::DimensionMismatch {
                expected: self.xi.len(),
                found: tree.len(),
            });
        }
        let ratio = sched.omega1() / self.t1;
        let mut worst: f64 = 0.0;
        let nodes: Vec<NodeId> = tree.node_order().collect();
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                let s = sched.dissimilarity_unchecked(tree, a, b);
                worst = worst.max((s - ratio * self.distance(a, b)).abs());
            }
        }
        Ok(worst)
    }

    /// The hierarchical and symmetric properties under Euclidean distance.
    pub fn check_hs(&self, tree: &Tree) -> HsReport {
        hs_report(tree, |a, b| self.distance(a, b))
    }

    /// Matrix with coordinates as rows and nodes (in node order) as columns.
    pub fn to_csv(&self, tree: &Tree) -> String {
        let mut out = String::new();
        let header: Vec<&str> = tree.node_order().map(|n| tree.id(n)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in 0..self.dim {
            let cells: Vec<String> = tree
                .node_order()
                .map(|n| format_coordinate(self.point(n)[row]))
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// JSON object mapping node id to its coordinates, in node order.
    pub fn to_json(&self, tree: &Tree) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::pretty(&mut buf);
        let mut map = ser.serialize_map(Some(tree.q()))?;
        for n in tree.node_order() {
            map.serialize_entry(tree.id(n), self.point(n).as_slice())?;
        }
        map.end()?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
    }
}

/// A tree together with its embedding; the unit trainers and predictors
/// work against.
#[derive(Clone, Debug)]
pub struct EmbeddedTree {
    tree: Tree,
    table: EmbeddingTable,
}

impl EmbeddedTree {
    pub fn new(tree: Tree, t1: f64, delta: f64) -> Result<Self> {
        let table = EmbeddingTable::build(&tree, t1, delta)?;
        Ok(EmbeddedTree { tree, table })
    }

    /// Embedding with `T^(1) = 1` and `δ = √5`.
    pub fn with_defaults(tree: Tree) -> Result<Self> {
        Self::new(tree, 1.0, crate::dissimilarity::default_delta())
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn point(&self, node: NodeId) -> &DVector<f64> {
        self.table.point(node)
    }
}

fn format_coordinate(v: f64) -> String {
    // Avoid printing "-0".
    if v == 0.0 {
        "0".to_owned()
    } else {
        format!("{v}")
    }
}
