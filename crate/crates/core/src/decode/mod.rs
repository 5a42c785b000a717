//! Max-score decoding and evaluation surfaces.

mod ethogram;
mod metrics;
mod viterbi;

pub use ethogram::{
    export_ethogram, parse_ethogram_csv, render_svg, write_ethogram_csv, Ethogram, Segment,
    SVG_MAX_WIDTH,
};
pub use metrics::{
    per_class_accuracy, roc_auc, ClassAccuracy, ConfusionMatrix, MetricsReport, RocCurve,
};
pub use viterbi::{path_score, viterbi_decode};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("cannot decode an empty sequence")]
    EmptySequence,
    #[error("score rows must all have {expected} entries, row {row} has {got}")]
    RaggedScores { row: usize, expected: usize, got: usize },
    #[error("length mismatch: {truth} truth labels vs {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("label {label} out of range for {labels} labels")]
    LabelOutOfRange { label: usize, labels: usize },
    #[error("ROC needs both positive and negative examples")]
    DegenerateLabels,
    #[error("ethogram CSV line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
