//! Kernel SVM training on a budget.
//!
//! The centerpiece is a dual stochastic coordinate ascent solver that keeps
//! the number of basis points below a hard budget `B` by merging pairs of
//! support vectors. Primal (Pegasos-style) budgeted SGD and the exact,
//! non-budgeted variants of both solvers are included as baselines, together
//! with diagnostics (objective values, progress identities, convergence
//! bounds) and a brute-force box-QP reference oracle.
//!
//! Datasets are sparse text files in the usual `<label> <idx>:<val> ...`
//! format. Features are used as-is; no scaling is applied (preprocess the
//! data yourself if your features need it).

pub mod budget;
pub mod data;
pub mod diagnostics;
pub mod kernel;
pub mod model;
pub mod oracle;
pub mod plot;
pub mod solver;
pub mod synth;
pub mod verify;

pub use data::{SparseDataset, SparseVector};
pub use kernel::KernelSpec;
pub use model::{AlphaState, BudgetModel};
pub use solver::{Algorithm, TrainConfig};

use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Format(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
