//! Hierarchical classification with an exact label embedding.
//!
//! The crate maps every class of a tree-shaped taxonomy to a point in
//! `R^{n_leaf − 1}` so that Euclidean distances reproduce a tree
//! dissimilarity exactly, then classifies top-down by comparing inner
//! products between a linear score `f(x) = A·(1, x)` and the embedded
//! children of the current node.
//!
//! ```
//! use hierle::{EmbeddingTable, Tree, WeightSchedule};
//!
//! let tree = Tree::parse("animal: elephant dog\nelephant: african asian\n")?;
//! let delta = 5f64.sqrt();
//! let table = EmbeddingTable::build(&tree, 1.0, delta)?;
//! let weights = WeightSchedule::build(&tree, 1.0, delta)?;
//! assert_eq!(table.dim(), 2);
//! assert!(table.verify_isometry(&tree, &weights)? < 1e-12);
//! # Ok::<(), hierle::Error>(())
//! ```

pub mod classifier;
pub mod cli;
pub mod datagen;
pub mod dissimilarity;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod hierarchy;
pub mod io;
pub mod metrics;

pub use classifier::{LabeledDataset, LinearModel, Loss};
pub use dissimilarity::{HsReport, WeightSchedule};
pub use embedding::{EmbeddedTree, EmbeddingTable};
pub use error::{Error, Result, TreeError};
pub use hierarchy::{NodeId, Path, Tree};
pub use metrics::EvaluationReport;

