//! File formats: taxonomy documents, labelled CSV data, prediction CSV and
//! model JSON.
//!
//! Data CSV has a header `f1,…,fp,label`; the label column holds a leaf id or
//! a slash-joined path and may be omitted for prediction inputs. Predictions
//! are written as `index,path`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path as FsPath;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classifier::{LabeledDataset, LinearModel, Loss};
use crate::embedding::EmbeddedTree;
use crate::error::{Error, Result};
use crate::hierarchy::{NodeId, Path, Tree};

pub fn read_tree(path: impl AsRef<FsPath>) -> Result<Tree> {
    let text = fs::read_to_string(path)?;
    Ok(Tree::parse(&text)?)
}

/// Features plus the raw label column, if there is one.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub features: DMatrix<f64>,
    pub labels: Option<Vec<String>>,
}

pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_col = headers.iter().position(|h| h.trim() == "label");
    let p = headers.len() - usize::from(label_col.is_some());
    if p == 0 {
        return Err(Error::InvalidData("the data file has no feature columns".into()));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (col, field) in record.iter().enumerate() {
            if Some(col) == label_col {
                labels.push(field.trim().to_owned());
            } else {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidData(format!(
                        "row {}: `{field}` in column `{}` is not a number",
                        row + 1,
                        &headers[col]
                    ))
                })?;
                values.push(v);
            }
        }
    }
    let n = values.len() / p;
    if n == 0 {
        return Err(Error::InvalidData("the data file has no rows".into()));
    }
    Ok(Table {
        features: DMatrix::from_row_slice(n, p, &values),
        labels: label_col.map(|_| labels),
    })
}

/// Resolves a leaf id or a slash-joined path to a leaf.
pub fn resolve_label(tree: &Tree, label: &str) -> Result<NodeId> {
    let leaf = if label.contains('/') {
        tree.parse_path(label)?.leaf()
    } else {
        tree.node(label)?
    };
    if !tree.is_leaf(leaf) {
        return Err(crate::TreeError::NotALeaf(label.to_owned()).into());
    }
    Ok(leaf)
}

pub fn dataset_from_table(tree: &Tree, table: Table) -> Result<LabeledDataset> {
    let labels = table
        .labels
        .ok_or_else(|| Error::InvalidData("the data file has no `label` column".into()))?;
    let ids = labels
        .iter()
        .map(|l| resolve_label(tree, l))
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(tree, table.features, ids)
}

pub fn read_dataset(path: impl AsRef<FsPath>, tree: &Tree) -> Result<LabeledDataset> {
    dataset_from_table(tree, read_table(fs::File::open(path)?)?)
}

pub fn write_dataset<W: Write>(writer: W, tree: &Tree, data: &LabeledDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=data.p()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut record: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        record.push(tree.id(data.labels()[i]).to_owned());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_predictions<W: Write>(writer: W, tree: &Tree, paths: &[Path]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "path"])?;
    for (i, path) in paths.iter().enumerate() {
        w.write_record([i.to_string(), tree.format_path(path)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an `index,path` file; rows must be numbered `0..n` in order.
pub fn read_predictions<R: Read>(reader: R, tree: &Tree) -> Result<Vec<Path>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let (Some(index), Some(path)) = (record.get(0), record.get(1)) else {
            return Err(Error::InvalidData(format!("prediction row {} needs `index,path`", i + 1)));
        };
        if index.trim() != i.to_string() {
            return Err(Error::InvalidData(format!(
                "prediction row {} has index `{index}`, expected {i}",
                i + 1
            )));
        }
        out.push(tree.parse_path(path.trim())?);
    }
    Ok(out)
}

/// On-disk form of a trained model. The taxonomy travels with the model so
/// that prediction needs nothing else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub tree_fingerprint: String,
    pub tree: String,
    pub t1: f64,
    pub delta: f64,
    pub loss: Loss,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub intercept: bool,
    pub k: usize,
    pub p: usize,
    /// `A` in row-major order, `k × (p + 1)`.
    pub coef: Vec<f64>,
}

const MODEL_FORMAT: &str = "hierle-model/1";

impl ModelFile {
    pub fn new(space: &EmbeddedTree, model: &LinearModel) -> Self {
        let coef = model.coef();
        ModelFile {
            format: MODEL_FORMAT.into(),
            tree_fingerprint: space.tree().fingerprint(),
            tree: space.tree().to_document(),
            t1: space.table().t1(),
            delta: space.table().delta(),
            loss: model.loss(),
            gamma: model.gamma(),
            lambda: model.lambda(),
            intercept: model.intercept(),
            k: coef.nrows(),
            p: coef.ncols() - 1,
            coef: coef.transpose().as_slice().to_vec(),
        }
    }

    pub fn into_parts(self) -> Result<(EmbeddedTree, LinearModel)> {
        if self.format != MODEL_FORMAT {
            return Err(Error::InvalidData(format!("unsupported model format `{}`", self.format)));
        }
        let tree = Tree::parse(&self.tree)?;
        if tree.fingerprint() != self.tree_fingerprint {
            return Err(Error::InvalidData("the stored taxonomy does not match its fingerprint".into()));
        }
        let space = EmbeddedTree::new(tree, self.t1, self.delta)?;
        if self.k != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: self.k,
            });
        }
        if self.coef.len() != self.k * (self.p + 1) {
            return Err(Error::DimensionMismatch {
                expected: self.k * (self.p + 1),
                found: self.coef.len(),
            });
        }
        let coef = DMatrix::from_row_slice(self.k, self.p + 1, &self.coef);
        let mut model = LinearModel::new(coef, self.loss);
        if let Some(g) = self.gamma {
            model = model.with_gamma(g);
        }
        if let Some(l) = self.lambda {
            model = model.with_lambda(l);
        }
        if !self.intercept {
            model = model.without_intercept();
        }
        Ok((space, model))
    }
}

pub fn model_to_json(space: &EmbeddedTree, model: &LinearModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile::new(space, model))?)
}

pub fn model_from_json(text: &str) -> Result<(EmbeddedTree, LinearModel)> {
    serde_json::from_str::<ModelFile>(text)?.into_parts()
}

pub fn save_model(path: impl AsRef<FsPath>, space: &EmbeddedTree, model: &LinearModel) -> Result<()> {
    let mut text = model_to_json(space, model)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<FsPath>) -> Result<(EmbeddedTree, LinearModel)> {
    model_from_json(&fs::read_to_string(path)?)
}
