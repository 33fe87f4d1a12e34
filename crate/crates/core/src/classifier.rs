//! Angle-based top-down classification over an embedded taxonomy.
//!
//! A linear model scores an input as `f(x) = A·x̃` with `x̃ = (1, x)`. At each
//! layer the prediction moves to the child whose embedded point has the
//! largest inner product with `f(x)`; ties go to the leftmost child. Because
//! siblings share one norm, this is the same as picking the nearest child.
//!
//! Training penalises, for every sample, layer and competing sibling, the gap
//! `G = ⟨f(x), ξ(true child)⟩ − ⟨f(x), ξ(sibling)⟩` through a surrogate loss
//! plus `λ‖A‖²_F`. With the linear surrogate `ℓ(u) = −u` the minimiser is
//! `A = −B/(2λ)` where `B` averages `(ξ(sibling) − ξ(true child))·x̃ᵀ`; the
//! weighted variant down-weights samples with large `‖A_lin x̃‖`. The hinge
//! surrogate is solved by dual coordinate descent.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddedTree;
use crate::error::{Error, Result};
use crate::hierarchy::{NodeId, Path, Tree};

/// Training criterion of a [`LinearModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    Linear,
    WeightedLinear,
    Hinge,
}

impl Loss {
    pub fn as_str(self) -> &'static str {
        match self {
            Loss::Linear => "linear",
            Loss::WeightedLinear => "weighted-linear",
            Loss::Hinge => "hinge",
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Loss::Linear),
            "wlinear" | "weighted-linear" | "wl" => Ok(Loss::WeightedLinear),
            "hinge" => Ok(Loss::Hinge),
            other => Err(Error::InvalidParameter(format!("unknown loss `{other}`"))),
        }
    }
}

/// Loss applied to each inner-product gap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surrogate {
    /// `ℓ(u) = −u`
    Linear,
    /// `ℓ(u) = max(1 − u, 0)`
    Hinge,
}

impl Surrogate {
    pub fn value(self, u: f64) -> f64 {
        match self {
            Surrogate::Linear => -u,
            Surrogate::Hinge => (1.0 - u).max(0.0),
        }
    }
}

/// Feature matrix (one row per sample) with a leaf label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    features: DMatrix<f64>,
    labels: Vec<NodeId>,
}

impl LabeledDataset {
    pub fn new(tree: &Tree, features: DMatrix<f64>, labels: Vec<NodeId>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::InvalidData(
                "a dataset needs at least one sample and one feature".into(),
            ));
        }
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                found: labels.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature in row {}",
                pos % features.nrows() + 1
            )));
        }
        for &label in &labels {
            if label.index() >= tree.len() || !tree.is_leaf(label) {
                return Err(Error::InvalidData(format!(
                    "label `{}` is not a leaf",
                    if label.index() < tree.len() {
                        tree.id(label).to_owned()
                    } else {
                        label.to_string()
                    }
                )));
            }
        }
        Ok(LabeledDataset { features, labels })
    }

    /// Builds a dataset from row vectors and leaf ids.
    pub fn from_rows(tree: &Tree, rows: &[Vec<f64>], labels: &[&str]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        let features = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        let labels = labels
            .iter()
            .map(|l| tree.node(l))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(tree, features, labels)
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    /// Number of raw features (without the intercept).
    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[NodeId] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// `(1, x_i)`.
    pub fn augmented(&self, i: usize) -> DVector<f64> {
        augment_row(&self.features, i)
    }

    /// `(1, x_i)`, or `(0, x_i)` when fitting without an intercept.
    fn design(&self, i: usize, intercept: bool) -> DVector<f64> {
        let mut x = augment_row(&self.features, i);
        if !intercept {
            x[0] = 0.0;
        }
        x
    }

    pub fn path(&self, tree: &Tree, i: usize) -> Path {
        tree.path_of_leaf(self.labels[i])
            .expect("labels are validated to be leaves")
    }

    /// Rows `range` as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> LabeledDataset {
        LabeledDataset {
            features: self.features.rows(range.start, range.len()).into_owned(),
            labels: self.labels[range].to_vec(),
        }
    }

    fn check_against(&self, tree: &Tree) -> Result<()> {
        for &label in &self.labels {
            if label.index() >= tree.len() || !tree.is_leaf(label) {
                return Err(Error::InvalidData(format!(
                    "label {label} is not a leaf of this taxonomy"
                )));
            }
        }
        Ok(())
    }
}

fn augment_row(features: &DMatrix<f64>, i: usize) -> DVector<f64> {
    let p = features.ncols();
    DVector::from_fn(p + 1, |j, _| if j == 0 { 1.0 } else { features[(i, j - 1)] })
}

/// `A ∈ R^{K×(p+1)}`; column 0 multiplies the constant feature and is zero
/// for models fitted without an intercept.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    coef: DMatrix<f64>,
    loss: Loss,
    gamma: Option<f64>,
    lambda: Option<f64>,
    intercept: bool,
}

impl LinearModel {
    pub fn new(coef: DMatrix<f64>, loss: Loss) -> Self {
        LinearModel {
            coef,
            loss,
            gamma: None,
            lambda: None,
            intercept: true,
        }
    }

    /// Zeroes the intercept column and marks the model as intercept-free.
    pub fn without_intercept(mut self) -> Self {
        self.coef.column_mut(0).fill(0.0);
        self.intercept = false;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    /// All-zero model. Every layer ties, so it always predicts the leftmost path.
    pub fn zeros(dim: usize, p: usize) -> Self {
        Self::new(DMatrix::zeros(dim, p + 1), Loss::Linear)
    }

    pub fn coef(&self) -> &DMatrix<f64> {
        &self.coef
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn intercept(&self) -> bool {
        self.intercept
    }

    /// Embedding dimension `K`.
    pub fn dim(&self) -> usize {
        self.coef.nrows()
    }

    /// Number of raw features `p`.
    pub fn n_features(&self) -> usize {
        self.coef.ncols() - 1
    }

    /// Same model with `A` multiplied by `kappa`.
    pub fn scaled(&self, kappa: f64) -> LinearModel {
        LinearModel {
            coef: &self.coef * kappa,
            ..self.clone()
        }
    }

    /// `f(x) = A·(1, x)`.
    pub fn score(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: x.len(),
            });
        }
        let mut f = self.coef.column(0).into_owned();
        for (j, &v) in x.iter().enumerate() {
            f.axpy(v, &self.coef.column(j + 1), 1.0);
        }
        Ok(f)
    }

    fn score_augmented(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.coef * x
    }

    fn check_space(&self, space: &EmbeddedTree) -> Result<()> {
        if self.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// `⟨f(x), ξ_c⟩` for each candidate.
    pub fn decision_values(
        &self,
        space: &EmbeddedTree,
        x: &[f64],
        candidates: &[NodeId],
    ) -> Result<Vec<f64>> {
        self.check_space(space)?;
        let f = self.score(x)?;
        Ok(candidates.iter().map(|&c| f.dot(space.point(c))).collect())
    }

    pub fn predict(&self, space: &EmbeddedTree, x: &[f64]) -> Result<Path> {
        self.check_space(space)?;
        Ok(predict_topdown(space, &self.score(x)?))
    }

    pub fn predict_dataset(&self, space: &EmbeddedTree, data: &LabeledDataset) -> Result<Vec<Path>> {
        self.predict_matrix(space, data.features())
    }

    /// Predicts every row of `features`.
    pub fn predict_matrix(&self, space: &EmbeddedTree, features: &DMatrix<f64>) -> Result<Vec<Path>> {
        self.check_space(space)?;
        if features.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: features.ncols(),
            });
        }
        Ok((0..features.nrows())
            .map(|i| predict_topdown(space, &self.score_augmented(&augment_row(features, i))))
            .collect())
    }

    pub fn margin(&self, space: &EmbeddedTree, x: &[f64], path: &Path) -> Result<f64> {
        self.check_space(space)?;
        hierarchy_margin(space, &self.score(x)?, path)
    }
}

/// Top-down descent: at each node pick the child with the largest inner
/// product with `f`, the leftmost one on ties.
pub fn predict_topdown(space: &EmbeddedTree, f: &DVector<f64>) -> Path {
    let tree = space.tree();
    let mut nodes = vec![tree.root()];
    let mut cur = tree.root();
    while !tree.is_leaf(cur) {
        let mut best = None;
        let mut best_value = f64::NEG_INFINITY;
        for &c in tree.children(cur) {
            let v = f.dot(space.point(c));
            if best.is_none() || v > best_value {
                best = Some(c);
                best_value = v;
            }
        }
        cur = best.expect("internal nodes have children");
        nodes.push(cur);
    }
    tree.path_from_nodes(nodes).expect("descent yields a valid path")
}

/// Visits every `(layer node, competing sibling)` pair along `path`.
fn for_each_gap(tree: &Tree, path: &Path, mut visit: impl FnMut(NodeId, NodeId)) {
    for &node in path.below_root() {
        for &sib in tree.siblings(node) {
            if sib != node {
                visit(node, sib);
            }
        }
    }
}

/// Smallest inner-product gap between the true child and any sibling over
/// all layers of `path`.
pub fn hierarchy_margin(space: &EmbeddedTree, f: &DVector<f64>, path: &Path) -> Result<f64> {
    let tree = space.tree();
    tree.path_from_nodes(path.nodes().to_vec())?;
    let mut margin = f64::INFINITY;
    for_each_gap(tree, path, |node, sib| {
        let g = f.dot(space.point(node)) - f.dot(space.point(sib));
        margin = margin.min(g);
    });
    Ok(margin)
}

/// Surrogate loss of one sample: the sum of `ℓ(G)` over its gaps.
pub fn sample_surrogate(space: &EmbeddedTree, f: &DVector<f64>, path: &Path, loss: Surrogate) -> f64 {
    let mut total = 0.0;
    for_each_gap(space.tree(), path, |node, sib| {
        total += loss.value(f.dot(space.point(node)) - f.dot(space.point(sib)));
    });
    total
}

/// Mean surrogate loss of a model over a dataset.
pub fn surrogate_risk(
    model: &LinearModel,
    space: &EmbeddedTree,
    data: &LabeledDataset,
    loss: Surrogate,
) -> Result<f64> {
    model.check_space(space)?;
    data.check_against(space.tree())?;
    if data.p() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            found: data.p(),
        });
    }
    let total: f64 = (0..data.n())
        .map(|i| {
            let f = model.score_augmented(&data.augmented(i));
            sample_surrogate(space, &f, &data.path(space.tree(), i), loss)
        })
        .sum();
    Ok(total / data.n() as f64)
}

/// `n⁻¹ Σ w_i V(A x̃_i) + λ‖A‖²_F`; unit weights when `weights` is `None`.
pub fn objective(
    space: &EmbeddedTree,
    data: &LabeledDataset,
    coef: &DMatrix<f64>,
    loss: Surrogate,
    lambda: f64,
    weights: Option<&[f64]>,
) -> f64 {
    let tree = space.tree();
    let mut total = 0.0;
    for i in 0..data.n() {
        let f = coef * data.augmented(i);
        let w = weights.map_or(1.0, |w| w[i]);
        total += w * sample_surrogate(space, &f, &data.path(tree, i), loss);
    }
    total / data.n() as f64 + lambda * coef.norm_squared()
}

/// `Σ_m Σ_sib (ξ_sib − ξ_true)` for every leaf, indexed by node.
fn leaf_directions(space: &EmbeddedTree) -> Vec<Option<DVector<f64>>> {
    let tree = space.tree();
    let mut out = vec![None; tree.len()];
    for &leaf in tree.leaves() {
        let path = tree.path_of_leaf(leaf).expect("leaf");
        let mut dir = DVector::zeros(space.dim());
        for_each_gap(tree, &path, |node, sib| {
            dir += space.point(sib);
            dir -= space.point(node);
        });
        out[leaf.index()] = Some(dir);
    }
    out
}

/// `−B/(2λ)` where `B = n⁻¹ Σ w_i c(y_i) x̃_iᵀ`.
fn closed_form(
    space: &EmbeddedTree,
    data: &LabeledDataset,
    weights: Option<&[f64]>,
    fit: &LinearFit,
) -> DMatrix<f64> {
    let dirs = leaf_directions(space);
    let mut b = DMatrix::zeros(space.dim(), data.p() + 1);
    for i in 0..data.n() {
        let dir = dirs[data.labels()[i].index()]
            .as_ref()
            .expect("labels are leaves");
        let w = weights.map_or(1.0, |w| w[i]);
        b.ger(w, dir, &data.design(i, fit.intercept), 1.0);
    }
    b * (-1.0 / (2.0 * fit.lambda * data.n() as f64))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )))
    }
}

/// Settings of the closed-form estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    /// Ridge weight. Predictions do not depend on it.
    pub lambda: f64,
    pub intercept: bool,
}

impl Default for LinearFit {
    fn default() -> Self {
        LinearFit {
            lambda: 1.0,
            intercept: true,
        }
    }
}

fn finish(coef: DMatrix<f64>, loss: Loss, lambda: f64, intercept: bool) -> LinearModel {
    let model = LinearModel::new(coef, loss).with_lambda(lambda);
    if intercept {
        model
    } else {
        model.without_intercept()
    }
}

/// Closed-form linear-loss estimator with `λ = 1` and an intercept.
pub fn train_linear(space: &EmbeddedTree, data: &LabeledDataset) -> Result<LinearModel> {
    train_linear_with(space, data, &LinearFit::default())
}

/// Closed-form linear-loss estimator `−B/(2λ)`.
pub fn train_linear_with(space: &EmbeddedTree, data: &LabeledDataset, fit: &LinearFit) -> Result<LinearModel> {
    check_lambda(fit.lambda)?;
    data.check_against(space.tree())?;
    let coef = closed_form(space, data, None, fit);
    Ok(finish(coef, Loss::Linear, fit.lambda, fit.intercept))
}

/// `w_i = 1 / (1 + ‖A x̃_i‖^γ)`.
pub fn adaptive_weights(model: &LinearModel, features: &DMatrix<f64>, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if features.ncols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            found: features.ncols(),
        });
    }
    Ok((0..features.nrows())
        .map(|i| {
            let norm = model.score_augmented(&augment_row(features, i)).norm();
            1.0 / (1.0 + norm.powf(gamma))
        })
        .collect())
}

/// Closed-form weighted linear-loss estimator for given sample weights.
pub fn train_with_weights(
    space: &EmbeddedTree,
    data: &LabeledDataset,
    weights: &[f64],
    fit: &LinearFit,
) -> Result<LinearModel> {
    check_lambda(fit.lambda)?;
    data.check_against(space.tree())?;
    if weights.len() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    let coef = closed_form(space, data, Some(weights), fit);
    Ok(finish(coef, Loss::WeightedLinear, fit.lambda, fit.intercept))
}

/// Two-stage adaptive weighted linear-loss estimator (`λ = 1`, with intercept).
pub fn train_weighted_linear(
    space: &EmbeddedTree,
    data: &LabeledDataset,
    gamma: f64,
) -> Result<LinearModel> {
    let base = train_linear(space, data)?;
    train_weighted_linear_from(space, data, &base, gamma)
}

/// Second stage of [`train_weighted_linear`] on an already fitted linear
/// model; the intercept setting is taken from `base`.
pub fn train_weighted_linear_from(
    space: &EmbeddedTree,
    data: &LabeledDataset,
    base: &LinearModel,
    gamma: f64,
) -> Result<LinearModel> {
    let weights = adaptive_weights(base, data.features(), gamma)?;
    let fit = LinearFit {
        lambda: 1.0,
        intercept: base.intercept(),
    };
    Ok(train_with_weights(space, data, &weights, &fit)?.with_gamma(gamma))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HingeOptions {
    /// Upper bound on full passes over the constraints.
    pub max_epochs: usize,
    /// Stop once the duality gap is at most `tolerance · max(1, primal)`.
    pub tolerance: f64,
    pub intercept: bool,
}

impl Default for HingeOptions {
    fn default() -> Self {
        HingeOptions {
            max_epochs: 5000,
            tolerance: 1e-6,
            intercept: true,
        }
    }
}

/// Result of [`train_hinge`].
#[derive(Clone, Debug)]
pub struct HingeFit {
    pub model: LinearModel,
    pub epochs: usize,
    /// `n⁻¹ Σ V_hinge + λ‖A‖²` at the returned model.
    pub primal: f64,
    /// Dual lower bound on the optimal primal value.
    pub dual: f64,
    /// Dual quadratic-program objective after each epoch; non-increasing.
    pub trace: Vec<f64>,
}

impl HingeFit {
    pub fn gap(&self) -> f64 {
        self.primal - self.dual
    }
}

/// Hinge-loss estimator, `argmin n⁻¹ Σ V_hinge(A x̃_i) + λ‖A‖²_F`.
///
/// Every gap is a linear functional `⟨A, D⟩` with the rank-one
/// `D = (ξ_true − ξ_sib)·x̃ᵀ`, so the problem is a linear SVM over these
/// constraints with box `[0, 1/(2λn)]` on the dual variables. The dual is
/// minimised by cyclic exact coordinate descent, which is deterministic and
/// never increases the dual objective; the duality gap bounds the primal
/// suboptimality of the returned model.
pub fn train_hinge(
    space: &EmbeddedTree,
    data: &LabeledDataset,
    lambda: f64,
    options: &HingeOptions,
) -> Result<HingeFit> {
    check_lambda(lambda)?;
    data.check_against(space.tree())?;
    let tree = space.tree();
    let n = data.n();
    let cap = 1.0 / (2.0 * lambda * n as f64);

    struct Constraint {
        sample: usize,
        dir: DVector<f64>,
        sq_norm: f64,
    }
    let xs: Vec<DVector<f64>> = (0..n).map(|i| data.design(i, options.intercept)).collect();
    let mut constraints = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        for_each_gap(tree, &data.path(tree, i), |node, sib| {
            let dir = space.point(node) - space.point(sib);
            let sq_norm = dir.norm_squared() * x.norm_squared();
            constraints.push(Constraint { sample: i, dir, sq_norm });
        });
    }

    let mut coef = DMatrix::zeros(space.dim(), data.p() + 1);
    let mut beta = vec![0.0; constraints.len()];
    let mut trace = Vec::new();
    let primal_of = |coef: &DMatrix<f64>| objective(space, data, coef, Surrogate::Hinge, lambda, None);

    for epoch in 1..=options.max_epochs {
        for (t, c) in constraints.iter().enumerate() {
            let x = &xs[c.sample];
            let grad = c.dir.dot(&(&coef * x)) - 1.0;
            let updated = (beta[t] - grad / c.sq_norm).clamp(0.0, cap);
            let step = updated - beta[t];
            if step != 0.0 {
                coef.ger(step, &c.dir, x, 1.0);
                beta[t] = updated;
            }
        }
        // ½‖A‖² − Σβ, in the SVM scaling.
        let dual_qp = 0.5 * coef.norm_squared() - beta.iter().sum::<f64>();
        trace.push(dual_qp);
        let primal = primal_of(&coef);
        let dual = -2.0 * lambda * dual_qp;
        if primal - dual <= options.tolerance * primal.abs().max(1.0) {
            return Ok(HingeFit {
                model: finish(coef, Loss::Hinge, lambda, options.intercept),
                epochs: epoch,
                primal,
                dual,
                trace,
            });
        }
    }
    let primal = primal_of(&coef);
    let dual = -2.0 * lambda * trace.last().copied().unwrap_or(0.0);
    Err(Error::NotConverged {
        iterations: options.max_epochs,
        objective: primal,
        gap: primal - dual,
    })
}

/// Direction of the population minimiser under the linear loss:
/// `Σ_y P(y) Σ_m N_m η_m(y)`, with `N_m` the number of children of the
/// layer-`(m−1)` node on the path.
///
/// `probabilities` pairs leaves with `P(y | x)`.
pub fn population_direction(space: &EmbeddedTree, probabilities: &[(NodeId, f64)]) -> Result<DVector<f64>> {
    let tree = space.tree();
    let mut total = 0.0;
    let mut v = DVector::zeros(space.dim());
    for &(leaf, p) in probabilities {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid probability {p}")));
        }
        let path = tree.path_of_leaf(leaf)?;
        for &node in path.below_root() {
            let count = tree.siblings(node).len() as f64;
            v.axpy(p * count, space.table().offset(node), 1.0);
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::tests::FIGURE1;
    use approx::assert_abs_diff_eq;

    fn figure1_space() -> EmbeddedTree {
        EmbeddedTree::with_defaults(Tree::parse(FIGURE1).unwrap()).unwrap()
    }

    fn two_leaf() -> EmbeddedTree {
        EmbeddedTree::with_defaults(Tree::parse("r: left right").unwrap()).unwrap()
    }

    #[test]
    fn zero_model_values_and_leftmost_path() {
        let space = figure1_space();
        let tree = space.tree();
        let model = LinearModel::zeros(space.dim(), 2);
        let kids = tree.children(tree.root()).to_vec();
        assert_eq!(model.decision_values(&space, &[0.3, -1.0], &kids).unwrap(), vec![0.0, 0.0]);
        let path = model.predict(&space, &[0.3, -1.0]).unwrap();
        assert_eq!(tree.format_path(&path), "C11/C111/C1111");
        assert_eq!(model.margin(&space, &[1.0, 1.0], &path).unwrap(), 0.0);
    }

    #[test]
    fn two_leaf_inner_products() {
        let space = two_leaf();
        let tree = space.tree();
        // intercept −1, no slope
        let model = LinearModel::new(DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]), Loss::Linear);
        let kids = tree.children(tree.root()).to_vec();
        assert_eq!(model.decision_values(&space, &[5.0], &kids).unwrap(), vec![1.0, -1.0]);
        assert_eq!(tree.format_path(&model.predict(&space, &[5.0]).unwrap()), "left");
    }

    #[test]
    fn decision_values_match_distances() {
        let space = figure1_space();
        let tree = space.tree();
        let coef = DMatrix::from_fn(5, 3, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
        let model = LinearModel::new(coef, Loss::Linear);
        let x = [0.4, -1.3];
        let f = model.score(&x).unwrap();
        for parent in tree.nodes().filter(|&n| !tree.is_leaf(n)) {
            let kids = tree.children(parent);
            let vals = model.decision_values(&space, &x, kids).unwrap();
            for (&c, v) in kids.iter().zip(&vals) {
                let xi = space.point(c);
                let via_distance = -0.5 * ((&f - xi).norm_squared() - f.norm_squared() - xi.norm_squared());
                assert_abs_diff_eq!(*v, via_distance, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let space = figure1_space();
        let model = LinearModel::zeros(space.dim(), 2);
        assert!(matches!(
            model.predict(&space, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        let wrong = LinearModel::zeros(3, 2);
        assert!(wrong.predict(&space, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn point_scores_follow_their_path() {
        let space = figure1_space();
        let tree = space.tree();
        for &leaf in tree.leaves() {
            let path = predict_topdown(&space, space.point(leaf));
            assert_eq!(path.leaf(), leaf);
            assert!(hierarchy_margin(&space, space.point(leaf), &path).unwrap() > 0.0);
        }
    }

    #[test]
    fn risk_at_zero() {
        let space = figure1_space();
        let tree = space.tree();
        let data = LabeledDataset::from_rows(
            tree,
            &[vec![0.0], vec![1.0], vec![2.0]],
            &["C1111", "C121", "C112"],
        )
        .unwrap();
        let model = LinearModel::zeros(space.dim(), 1);
        assert_eq!(surrogate_risk(&model, &space, &data, Surrogate::Linear).unwrap(), 0.0);
        // Competing siblings per path: C1111 → 1+1+1, C121 → 1+2, C112 → 1+1.
        let hinge = surrogate_risk(&model, &space, &data, Surrogate::Hinge).unwrap();
        assert_abs_diff_eq!(hinge, (3.0 + 3.0 + 2.0) / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn single_sample_linear_risk() {
        let space = two_leaf();
        let data = LabeledDataset::from_rows(space.tree(), &[vec![0.0]], &["left"]).unwrap();
        let model = LinearModel::new(DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]), Loss::Linear);
        assert_eq!(surrogate_risk(&model, &space, &data, Surrogate::Linear).unwrap(), -2.0);
    }

    #[test]
    fn two_leaf_closed_form() {
        let space = two_leaf();
        let data = LabeledDataset::from_rows(space.tree(), &[vec![0.0]], &["left"]).unwrap();
        let model = train_linear(&space, &data).unwrap();
        // B = (ξ_right − ξ_left)·x̃ᵀ = (2, 0); A = −B/2.
        assert_eq!(model.coef().as_slice(), &[-1.0, 0.0]);
        assert_eq!(space.tree().format_path(&model.predict(&space, &[0.0]).unwrap()), "left");
    }

    #[test]
    fn intercept_switch_only_touches_column_zero() {
        let space = figure1_space();
        let data = LabeledDataset::from_rows(
            space.tree(),
            &[vec![0.5, 1.0], vec![-1.0, 0.2], vec![0.0, 3.0]],
            &["C1111", "C123", "C112"],
        )
        .unwrap();
        let with = train_linear(&space, &data).unwrap();
        let fit = LinearFit {
            lambda: 1.0,
            intercept: false,
        };
        let without = train_linear_with(&space, &data, &fit).unwrap();
        assert!(!without.intercept());
        assert!(without.coef().column(0).iter().all(|&v| v == 0.0));
        assert_eq!(with.coef().columns(1, 2), without.coef().columns(1, 2));
        assert_eq!(&with.without_intercept(), &without);
    }

    #[test]
    fn weights() {
        let model = LinearModel::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), Loss::Linear);
        let x = DMatrix::from_row_slice(2, 1, &[3.0, -7.0]);
        for gamma in [0.1, 1.0, 10.0] {
            assert_eq!(adaptive_weights(&model, &x, gamma).unwrap(), vec![0.5, 0.5]);
        }
        let zero = LinearModel::zeros(1, 1);
        assert_eq!(adaptive_weights(&zero, &x, 2.0).unwrap(), vec![1.0, 1.0]);
        let big = LinearModel::new(DMatrix::from_row_slice(1, 2, &[2.0, 0.0]), Loss::Linear);
        assert!(adaptive_weights(&big, &x, 200.0).unwrap()[0] < 1e-50);
        assert!(adaptive_weights(&model, &x, 0.0).is_err());
    }

    #[test]
    fn unit_weights_reproduce_linear() {
        let space = figure1_space();
        let data = LabeledDataset::from_rows(
            space.tree(),
            &[vec![0.5, 1.0], vec![-1.0, 0.2], vec![0.0, 3.0]],
            &["C1111", "C123", "C112"],
        )
        .unwrap();
        let lin = train_linear(&space, &data).unwrap();
        let ones = train_with_weights(&space, &data, &[1.0; 3], &LinearFit::default()).unwrap();
        assert_eq!(lin.coef(), ones.coef());
        let halves = train_with_weights(&space, &data, &[0.5; 3], &LinearFit::default()).unwrap();
        assert_eq!(&(lin.coef() * 0.5), halves.coef());
    }

    #[test]
    fn population_direction_cases() {
        let space = two_leaf();
        let tree = space.tree();
        let (l, r) = (tree.node("left").unwrap(), tree.node("right").unwrap());
        let v = population_direction(&space, &[(l, 0.7), (r, 0.3)]).unwrap();
        assert_abs_diff_eq!(v[0], -((0.7 - 0.3) * 2.0), epsilon = 1e-15);
        assert_eq!(predict_topdown(&space, &v).leaf(), l);

        let sym = EmbeddedTree::with_defaults(Tree::parse("r: a b\na: c d\nb: e f").unwrap()).unwrap();
        let leaves: Vec<(NodeId, f64)> = sym.tree().leaves().iter().map(|&l| (l, 0.25)).collect();
        assert!(population_direction(&sym, &leaves).unwrap().norm() < 1e-15);

        assert!(population_direction(&space, &[(l, 0.7)]).is_err());
        assert!(population_direction(&space, &[(l, 1.2), (r, -0.2)]).is_err());
        assert!(population_direction(&space, &[(tree.root(), 1.0)]).is_err());
    }

    #[test]
    fn loss_names() {
        for loss in [Loss::Linear, Loss::WeightedLinear, Loss::Hinge] {
            assert_eq!(loss.as_str().parse::<Loss>().unwrap(), loss);
        }
        assert_eq!("wlinear".parse::<Loss>().unwrap(), Loss::WeightedLinear);
        assert!("svm".parse::<Loss>().is_err());
    }

    #[test]
    fn dataset_validation() {
        let space = figure1_space();
        let tree = space.tree();
        assert!(LabeledDataset::from_rows(tree, &[vec![1.0]], &["C11"]).is_err());
        assert!(LabeledDataset::from_rows(tree, &[vec![f64::NAN]], &["C112"]).is_err());
        assert!(LabeledDataset::from_rows(tree, &[], &[]).is_err());
        assert!(LabeledDataset::from_rows(tree, &[vec![1.0], vec![1.0, 2.0]], &["C112", "C112"]).is_err());
    }
}
