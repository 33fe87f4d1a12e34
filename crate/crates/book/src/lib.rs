//! Runs the code listings of the guide in `book/src` as doctests; mdbook
//! cannot link against `hierle` on its own.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/taxonomy.md")]
pub mod taxonomy {}

#[doc = include_str!("../../../book/src/dissimilarity.md")]
pub mod dissimilarity {}

#[doc = include_str!("../../../book/src/embedding.md")]
pub mod embedding {}

#[doc = include_str!("../../../book/src/classification.md")]
pub mod classification {}

#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
