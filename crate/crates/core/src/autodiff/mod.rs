//! Minimal reverse-mode differentiation over dense `f64` matrices.
//!
//! Only bias-add broadcasting is supported (`[m, n] + [1, n]`); every other
//! op requires matching shapes.

mod optim;
mod tape;
mod tensor;

pub use optim::{sgd_step, Adam};
pub use tape::{log_sum_exp_slice, Axis, Gradients, NodeId, Tape};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("invalid tensor shape {0:?}")]
    InvalidShape(Vec<usize>),
    #[error("shape {shape:?} does not hold {len} values")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("slice {start}..{start}+{len} out of range for extent {extent}")]
    SliceOutOfRange {
        start: usize,
        len: usize,
        extent: usize,
    },
    #[error("concat of zero tensors")]
    EmptyConcat,
    #[error("learning rate must be finite and nonnegative, got {0}")]
    InvalidLearningRate(f64),
    #[error("{params} parameter blocks but {grads} gradient blocks")]
    BlockCount { params: usize, grads: usize },
}
