use serde::{Deserialize, Serialize};

use super::ModelError;

/// Subsets of views are enumerated exhaustively, so the view count is capped.
pub const MAX_VIEWS: usize = 4;

/// How per-label fusion weights over view subsets are formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttentionMode {
    /// Softmax of bilinear label/latent scores.
    #[default]
    Learned,
    /// Equal weight on every subset.
    Uniform,
    /// Only the posterior fused from all views.
    SharedOnly,
}

/// Architecture and training hyper-parameters; the `[model]` section of the
/// config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub views: usize,
    pub feature_dims: Vec<usize>,
    pub labels: usize,
    pub latent_dim: usize,
    pub hidden_dim: usize,
    /// Width of the hidden layer in the inference and generative nets.
    pub mlp_dim: usize,
    pub embed_dim: usize,
    pub lambda_elbo: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub batches_per_epoch: usize,
    /// Training subsequence length.
    pub window: usize,
    pub balanced_sampling: bool,
    pub attention: AttentionMode,
    pub transitions: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            views: 2,
            feature_dims: vec![8, 8],
            labels: 4,
            latent_dim: 8,
            hidden_dim: 16,
            mlp_dim: 16,
            embed_dim: 8,
            lambda_elbo: 0.1,
            lr: 0.01,
            epochs: 30,
            batch_size: 16,
            batches_per_epoch: 10,
            window: 20,
            balanced_sampling: true,
            attention: AttentionMode::Learned,
            transitions: true,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.views == 0 {
            return bad("views must be >= 1");
        }
        if self.views > MAX_VIEWS {
            return Err(ModelError::TooManyViews { views: self.views });
        }
        if self.feature_dims.len() != self.views {
            return Err(ModelError::DimMismatch {
                what: "feature_dims".into(),
                expected: self.views,
                got: self.feature_dims.len(),
            });
        }
        if self.feature_dims.contains(&0) {
            return bad("feature dims must be >= 1");
        }
        if [self.labels, self.latent_dim, self.hidden_dim, self.mlp_dim, self.embed_dim].contains(&0) {
            return bad("labels, latent_dim, hidden_dim, mlp_dim and embed_dim must be >= 1");
        }
        if !(self.lambda_elbo >= 0.0 && self.lambda_elbo.is_finite()) {
            return bad("lambda_elbo must be finite and >= 0");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr must be finite and >= 0");
        }
        if self.batch_size == 0 || self.window == 0 {
            return bad("batch_size and window must be >= 1");
        }
        Ok(())
    }

    /// Number of nonempty view subsets.
    pub fn subset_count(&self) -> usize {
        (1 << self.views) - 1
    }
}
