//! Per-view recurrent encoders, product-of-experts latent fusion,
//! label-conditioned attention and a linear-chain label head.

mod checkpoint;
mod config;
mod crf;
mod graph;
mod infer;
mod params;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use config::{AttentionMode, ModelConfig, MAX_VIEWS};
pub use crf::{log_partition, sequence_log_likelihood, sequence_score};
pub use graph::{BatchLoss, LossTerms, WindowBatch};
pub use infer::{
    attend, attention_scores, attention_weights, elbo, encode_view, infer_latents, predict_unaries,
    reconstruct_view, subsets, unary_scores, view_expert, ViewExpert,
};
pub use params::{Block, ModelParams};
pub use train::{
    balanced_weights, train, TrainOutcome, TraceRow, WindowSampler,
};

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::gaussian::GaussianError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("{views} views requested; at most {MAX_VIEWS} are supported")]
    TooManyViews { views: usize },
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimMismatch {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("label {label} out of range for {labels} labels")]
    LabelOutOfRange { label: usize, labels: usize },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("inconsistent views: {0}")]
    InconsistentViews(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
