//! View-specific window features: interest points with cuboid and contextual
//! descriptors, dense trajectories pooled over external descriptor maps,
//! GMM/Fisher-vector encoding and PCA.

mod arrays;
mod descriptors;
mod fisher;
mod gmm;
mod interest;
mod pca;
mod pipeline;
mod trajectory;
mod window;

pub use arrays::{DescriptorMaps, FlowField, Frame, RawArray, Volume};
pub use descriptors::{contextual_feature, cuboid_gradients, CuboidSize};
pub use fisher::{fisher_encode, fisher_gradients, FisherVector};
pub use gmm::{gmm_fit, soft_assign, GmmFit, GmmModel, VARIANCE_FLOOR};
pub use interest::{
    detect_interest_points, gabor_pair, interest_response, spatial_kernels, DetectorParams,
    InterestPoint, SpatialKernels, TemporalKernels,
};
pub use pca::{pca_fit_transform, PcaResult};
pub use pipeline::{
    interest_descriptors, trajectory_descriptors, StreamEncoder, TaggedDescriptor, TrajectoryParams,
};
pub use trajectory::{
    dense_sample, median_flow, min_eigenvalue, structure_tensor, track_trajectory,
    track_trajectory_with, trajectory_pool, Trajectory, DEFAULT_MAX_DISPLACEMENT,
};
pub use window::{assemble_window_features, window_bounds, PointStream, ViewStreams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("volume {dims:?} (HxWxT) smaller than filter support {support:?}")]
    VolumeTooSmall {
        dims: (usize, usize, usize),
        support: (usize, usize, usize),
    },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("trajectory start ({x}, {y}) lies outside the flow field")]
    OutOfBoundsStart { x: f64, y: f64 },
    #[error("map coordinate ({x}, {y}) at frame {t} outside maps {dims:?} (HxWxT)")]
    ScaleMismatch {
        x: f64,
        y: f64,
        t: usize,
        dims: (usize, usize, usize),
    },
    #[error("{points} points cannot fit {needed} components")]
    InsufficientData { points: usize, needed: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("view has {got} frames, labels have {expected}")]
    ViewLengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed binary input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
