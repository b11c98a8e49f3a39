//! Complex dense/sparse block linear algebra.
//!
//! Everything here is hand-rolled on top of `Complex64`: the block sizes in
//! this solver are tiny (a few to a few hundred rows), determinism across
//! thread counts matters more than BLAS throughput, and the flop counters
//! must describe exactly what runs.

mod batch;
mod block;
mod cmat;

pub use batch::{
    compute_scale, sbsmm, sbsmm_half, HalfComplexBatch, SmallMatBatch, SmallMatBatchMut,
};
pub use block::{
    triple_product, BlockTriMatrix, SparseBlock, TripleOperand, TripleProductStrategy,
};
pub use cmat::{CMat, C64};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular pivot at row {row} (|pivot| = {magnitude:.3e})")]
    SingularPivot { row: usize, magnitude: f64 },
    #[error("strategy {0:?} requires a sparse encoding that is not present")]
    MissingSparseEncoding(TripleProductStrategy),
    #[error("invalid batch layout: {0}")]
    BadBatchLayout(String),
}
