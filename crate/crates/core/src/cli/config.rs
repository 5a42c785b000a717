use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::model::ModelConfig;
use crate::synth::GeneratorConfig;

/// Everything a run reads from its config file.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    pub model: ModelConfig,
    pub data: DataPaths,
    pub encode: EncodeConfig,
    pub eval: EvalConfig,
}

/// Input locations; unset paths default to files inside `--out`.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataPaths {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Display names of the labels; defaults to `class0`, `class1`, ...
    pub class_names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncodeConfig {
    pub window: usize,
    pub components: usize,
    pub pca_dim: usize,
    pub gmm_iters: usize,
    pub sigma_spatial: f64,
    pub omega_temporal: f64,
    pub threshold: f64,
    /// Cuboid half-extents `[hx, hy, ht]`.
    pub cuboid: [usize; 3],
    pub trajectory_step: usize,
    pub trajectory_length: usize,
    pub trajectory_stride: usize,
    pub eig_threshold: f64,
    pub map_scale: f64,
    pub seed: u64,
    /// Output file name inside `--out`.
    pub output: String,
    pub clips: Vec<ClipConfig>,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            window: 40,
            components: 4,
            pca_dim: 16,
            gmm_iters: 50,
            sigma_spatial: 1.5,
            omega_temporal: 0.25,
            threshold: 1e-4,
            cuboid: [2, 2, 1],
            trajectory_step: 5,
            trajectory_length: 15,
            trajectory_stride: 15,
            eig_threshold: 1e-3,
            map_scale: 1.0,
            seed: 0,
            output: "encoded.jsonl".into(),
            clips: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipConfig {
    pub id: String,
    /// Whitespace-separated label per frame; all zeros when absent.
    pub labels: Option<PathBuf>,
    pub views: Vec<ClipView>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipView {
    /// Brightness volume, one channel.
    pub volume: PathBuf,
    /// Flow fields, two channels (dx, dy).
    pub flow: Option<PathBuf>,
    /// Descriptor maps pooled along trajectories; required with `flow`.
    pub maps: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// `--seed` replaces every seed in the file.
    pub fn override_seed(&mut self, seed: u64) {
        self.generator.seed = seed;
        self.model.seed = seed;
        self.encode.seed = seed;
    }

    pub fn class_names(&self, labels: usize) -> Vec<String> {
        (0..labels)
            .map(|n| {
                self.eval
                    .class_names
                    .get(n)
                    .cloned()
                    .unwrap_or_else(|| format!("class{n}"))
            })
            .collect()
    }
}

/// Key reference printed by `--help`.
pub const CONFIG_HELP: &str = "\
CONFIG FILE (TOML; every key optional, unknown keys are rejected)

[generator]          synthetic data for `synth`
  views=2 classes=4 frames=200 feature_dim=8 count=40
  separation=4.0     visible class mean distance from background, in stds
  std=1.0            emission std
  self_transition=0.9  smallest self-transition probability
  forbidden=[[1,2]]  class pairs that never follow each other
  imbalance=[0.55,0.25,0.15,0.05]  stationary class weights
  visibility=[[true,true],[true,false],[false,true],[true,true]]  [class][view]
  transition=[[..]]  explicit row-stochastic matrix (overrides the above)
  seed=0

[model]              architecture and training for `train`
  views=2 feature_dims=[8,8] (empty: inferred from the data) labels=4
  latent_dim=8 hidden_dim=16 mlp_dim=16 embed_dim=8
  lambda_elbo=0.1 lr=0.01 epochs=30 batch_size=16 batches_per_epoch=10
  window=20          training subsequence length
  balanced_sampling=true  inverse-frequency window sampling
  attention=\"learned\" | \"uniform\" | \"shared-only\"
  transitions=true seed=0

[data]               inputs; defaults live in --out
  train=\"<out>/train.jsonl\" test=\"<out>/test.jsonl\" checkpoint=\"<out>/model.ckpt\"

[encode]             raw clips for `encode`
  window=40 components=4 pca_dim=16 gmm_iters=50
  sigma_spatial=1.5 omega_temporal=0.25 threshold=1e-4 cuboid=[2,2,1]
  trajectory_step=5 trajectory_length=15 trajectory_stride=15
  eig_threshold=1e-3 map_scale=1.0 seed=0 output=\"encoded.jsonl\"
  [[encode.clips]] id=\"clip\" labels=\"labels.txt\"
    [[encode.clips.views]] volume=\"v.raw\" flow=\"v.flow\" maps=\"v.maps\"

[eval]
  class_names=[\"a\",\"b\",..]

EXIT CODES
  0 success, 1 I/O or other failure, 2 config error, 3 malformed binary input,
  4 train data/config dimension mismatch, 5 eval checkpoint/config mismatch
";
