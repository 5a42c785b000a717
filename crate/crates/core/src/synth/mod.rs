//! Synthetic multi-view behaviour sequences and the on-disk dataset format.

mod dataset;
mod generator;

pub use dataset::{
    class_frequencies, load_dataset, read_dataset, save_dataset, write_dataset, FeatureMatrix,
    MultiViewSequence,
};
pub use generator::{generate, reversible_transition, GeneratorConfig, GeneratorSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    DimMismatch { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
