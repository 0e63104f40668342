//! Modularity community detection by balanced total variation minimization
//! with a pseudospectral MBO scheme.

// `!(x > 0.0)` is used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod construct;
pub mod eigen;
pub mod energy;
pub mod error;
pub mod graph;
pub mod io;
pub mod mbo;
pub mod metrics;
pub mod oracle;
pub mod partition;
pub mod partitioner;

pub use error::{Error, Result};
