use thiserror::Error;

/// Problems found while reading or validating a taxonomy.
///
/// Line numbers are 1-based and refer to the taxonomy document.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("the taxonomy document defines no nodes")]
    Empty,
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: duplicate node id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: node `{id}` has exactly one child; internal nodes need at least two")]
    SingleChild { line: usize, id: String },
    #[error("line {line}: node `{id}` closes a cycle")]
    Cycle { line: usize, id: String },
    #[error("line {line}: `{id}` is a second root (it is never listed as a child)")]
    MultipleRoots { line: usize, id: String },
    #[error("node `{child}` refers to unknown parent `{parent}`")]
    UnknownParent { child: String, parent: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` is not a leaf")]
    NotALeaf(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("hinge solver did not converge in {iterations} epochs (objective {objective:.6e}, duality gap {gap:.3e})")]
    NotConverged {
        iterations: usize,
        objective: f64,
        gap: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
