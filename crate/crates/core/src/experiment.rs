//! Train/validate/test protocol shared by the CLI and the simulation tests.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{self, HingeOptions, LabeledDataset, LinearFit, LinearModel, Loss};
use crate::datagen::{self, SyntheticSpec};
use crate::embedding::EmbeddedTree;
use crate::error::{Error, Result};
use crate::hierarchy::Path;
use crate::metrics::{self, EvaluationReport};

/// `{10^(i/10) : i = −20..=20}`.
pub fn default_grid() -> Vec<f64> {
    (-20..=20).map(|i| 10f64.powf(i as f64 / 10.0)).collect()
}

/// Truth/prediction pairs for a dataset.
pub fn prediction_pairs(
    model: &LinearModel,
    space: &EmbeddedTree,
    data: &LabeledDataset,
) -> Result<Vec<(Path, Path)>> {
    let preds = model.predict_dataset(space, data)?;
    Ok(preds
        .into_iter()
        .enumerate()
        .map(|(i, p)| (data.path(space.tree(), i), p))
        .collect())
}

fn validation_error(model: &LinearModel, space: &EmbeddedTree, val: &LabeledDataset) -> Result<f64> {
    metrics::zero_one_loss(&prediction_pairs(model, space, val)?)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::InvalidParameter(
            "a tuning grid must be a nonempty list of positive numbers".into(),
        ));
    }
    Ok(())
}

/// Picks the grid value with the smallest validation error, the smaller value
/// on ties.
fn select<F>(grid: &[f64], mut fit: F) -> Result<(LinearModel, f64)>
where
    F: FnMut(f64) -> Result<(LinearModel, f64)>,
{
    check_grid(grid)?;
    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(f64::total_cmp);
    order.dedup();
    let mut best: Option<(LinearModel, f64)> = None;
    for value in order {
        let (model, err) = fit(value)?;
        if best.as_ref().is_none_or(|(_, b)| err < *b) {
            best = Some((model, err));
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Weighted linear estimator with `γ` chosen on `val`. Returns the model and
/// its validation error.
pub fn tune_weighted_linear(
    space: &EmbeddedTree,
    train: &LabeledDataset,
    val: &LabeledDataset,
    gamma_grid: &[f64],
    intercept: bool,
) -> Result<(LinearModel, f64)> {
    let fit = LinearFit {
        lambda: 1.0,
        intercept,
    };
    let base = classifier::train_linear_with(space, train, &fit)?;
    select(gamma_grid, |gamma| {
        let model = classifier::train_weighted_linear_from(space, train, &base, gamma)?;
        let err = validation_error(&model, space, val)?;
        Ok((model, err))
    })
}

/// Hinge estimator with `λ` chosen on `val`.
pub fn tune_hinge(
    space: &EmbeddedTree,
    train: &LabeledDataset,
    val: &LabeledDataset,
    lambda_grid: &[f64],
    options: &HingeOptions,
) -> Result<(LinearModel, f64)> {
    select(lambda_grid, |lambda| {
        let model = classifier::train_hinge(space, train, lambda, options)?.model;
        let err = validation_error(&model, space, val)?;
        Ok((model, err))
    })
}

/// Grids and solver settings for one run of the protocol.
#[derive(Clone, Debug)]
pub struct Protocol {
    pub losses: Vec<Loss>,
    pub gamma_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub hinge: HingeOptions,
    /// Overrides `hinge.intercept` as well.
    pub intercept: bool,
    pub timing: bool,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            losses: vec![Loss::Linear, Loss::WeightedLinear, Loss::Hinge],
            gamma_grid: default_grid(),
            lambda_grid: default_grid(),
            hinge: HingeOptions::default(),
            intercept: true,
            timing: true,
        }
    }
}

impl Protocol {
    /// Settings of the simulation benchmark: no intercept column, since the
    /// simulated features carry the class signal directly. With an intercept
    /// the closed-form estimators pick up a bias proportional to each class's
    /// training count.
    pub fn simulation() -> Self {
        Protocol {
            intercept: false,
            ..Protocol::default()
        }
    }
}

/// Fits `loss` on `train` (tuning on `val` where applicable).
pub fn fit(
    space: &EmbeddedTree,
    loss: Loss,
    train: &LabeledDataset,
    val: &LabeledDataset,
    protocol: &Protocol,
) -> Result<LinearModel> {
    let fit = LinearFit {
        lambda: 1.0,
        intercept: protocol.intercept,
    };
    let hinge = HingeOptions {
        intercept: protocol.intercept,
        ..protocol.hinge.clone()
    };
    match loss {
        Loss::Linear => classifier::train_linear_with(space, train, &fit),
        Loss::WeightedLinear => {
            Ok(tune_weighted_linear(space, train, val, &protocol.gamma_grid, protocol.intercept)?.0)
        }
        Loss::Hinge => Ok(tune_hinge(space, train, val, &protocol.lambda_grid, &hinge)?.0),
    }
}

/// Train, tune and test one method. Wall time covers all three stages.
pub fn run_method(
    space: &EmbeddedTree,
    loss: Loss,
    train: &LabeledDataset,
    val: &LabeledDataset,
    test: &LabeledDataset,
    protocol: &Protocol,
) -> Result<(LinearModel, EvaluationReport)> {
    let start = Instant::now();
    let model = fit(space, loss, train, val, protocol)?;
    let pairs = prediction_pairs(&model, space, test)?;
    let report = EvaluationReport::compute(&pairs, space.tree())?;
    let elapsed = start.elapsed().as_secs_f64();
    let report = if protocol.timing {
        report.with_wall_time(elapsed)
    } else {
        report
    };
    Ok((model, report))
}

/// Reports of every method on one generated dataset, in `protocol.losses` order.
pub fn run_replication(spec: &SyntheticSpec, protocol: &Protocol) -> Result<Vec<EvaluationReport>> {
    let synthetic = spec.generate()?;
    let space = EmbeddedTree::with_defaults(synthetic.tree)?;
    let (train, val, test) = datagen::split_1_1_2(&synthetic.data)?;
    protocol
        .losses
        .iter()
        .map(|&loss| Ok(run_method(&space, loss, &train, &val, &test, protocol)?.1))
        .collect()
}

/// Runs `reps` replications of `base`, replacing its seed with
/// [`datagen::replication_seed`]`(master, r)`. Results are in replication
/// order regardless of `parallel`.
pub fn run_replications(
    base: &SyntheticSpec,
    master: u64,
    reps: usize,
    protocol: &Protocol,
    parallel: bool,
) -> Result<Vec<Vec<EvaluationReport>>> {
    let one = |r: usize| {
        let spec = SyntheticSpec {
            seed: datagen::replication_seed(master, r as u64),
            ..base.clone()
        };
        run_replication(&spec, protocol)
    };
    if parallel {
        (0..reps).into_par_iter().map(one).collect()
    } else {
        (0..reps).map(one).collect()
    }
}

/// Mean and standard error of one measure across replications.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Estimate {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, se }
    }
}

/// Aggregate of one method over all replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub loss: Loss,
    pub reps: usize,
    pub l01: Estimate,
    pub l_delta: Estimate,
    pub l_h_sib: Estimate,
    pub l_h_sub: Estimate,
    #[serde(rename = "hF")]
    pub hf: Estimate,
    pub wall_time_seconds: Option<Estimate>,
}

/// Summaries per method from `run_replications` output.
pub fn summarize(losses: &[Loss], results: &[Vec<EvaluationReport>]) -> Vec<MethodSummary> {
    losses
        .iter()
        .enumerate()
        .map(|(k, &loss)| {
            let col = |f: fn(&EvaluationReport) -> f64| {
                Estimate::of(&results.iter().map(|r| f(&r[k])).collect::<Vec<_>>())
            };
            let times: Option<Vec<f64>> = results.iter().map(|r| r[k].wall_time_seconds).collect();
            MethodSummary {
                loss,
                reps: results.len(),
                l01: col(|r| r.l01),
                l_delta: col(|r| r.l_delta),
                l_h_sib: col(|r| r.l_h_sib),
                l_h_sub: col(|r| r.l_h_sub),
                hf: col(|r| r.hf),
                wall_time_seconds: times.filter(|t| !t.is_empty()).map(|t| Estimate::of(&t)),
            }
        })
        .collect()
}
