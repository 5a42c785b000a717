use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, ModelError};
use crate::autodiff::Tensor;

/// Blocks per view, in declaration order.
pub(crate) const VIEW_BLOCKS: [&str; 11] = [
    "lstm_w", "lstm_u", "lstm_b", "inf_w1", "inf_b1", "inf_w2", "inf_b2", "gen_w1", "gen_b1",
    "gen_w2", "gen_b2",
];

pub(crate) const LSTM_W: usize = 0;
pub(crate) const LSTM_U: usize = 1;
pub(crate) const LSTM_B: usize = 2;
pub(crate) const INF_W1: usize = 3;
pub(crate) const INF_B1: usize = 4;
pub(crate) const INF_W2: usize = 5;
pub(crate) const INF_B2: usize = 6;
pub(crate) const GEN_W1: usize = 7;
pub(crate) const GEN_B1: usize = 8;
pub(crate) const GEN_W2: usize = 9;
pub(crate) const GEN_B2: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub name: String,
    pub value: Tensor,
}

/// All learnable blocks. Per view: recurrent cell (`lstm_w` D x 4H, `lstm_u`
/// H x 4H, `lstm_b`; gate order i, f, o, g), inference net, generative net.
/// Then the attention embedding `att_em` (N x d_e), bilinear map `att_u`
/// (d_e x d), label head `head_w` (N x d) and transitions `head_b` (N x N).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub blocks: Vec<Block>,
}

pub(crate) fn block_shapes(cfg: &ModelConfig) -> Vec<(String, [usize; 2])> {
    let (h, m, d, n, e) = (cfg.hidden_dim, cfg.mlp_dim, cfg.latent_dim, cfg.labels, cfg.embed_dim);
    let mut out = Vec::new();
    for (v, &x) in cfg.feature_dims.iter().enumerate() {
        let shapes = [
            [x, 4 * h],
            [h, 4 * h],
            [1, 4 * h],
            [h, m],
            [1, m],
            [m, 2 * d],
            [1, 2 * d],
            [d, m],
            [1, m],
            [m, h],
            [1, h],
        ];
        for (name, shape) in VIEW_BLOCKS.iter().zip(shapes) {
            out.push((format!("view{v}.{name}"), shape));
        }
    }
    out.push(("att_em".into(), [n, e]));
    out.push(("att_u".into(), [e, d]));
    out.push(("head_w".into(), [n, d]));
    out.push(("head_b".into(), [n, n]));
    out
}

impl ModelParams {
    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` initialisation; the
    /// transition matrix starts at zero.
    pub fn init(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let shapes = block_shapes(config);
        let mut blocks = Vec::with_capacity(shapes.len());
        let mut fan_in = 1;
        for (name, shape) in shapes {
            let value = if name == "head_b" {
                Tensor::zeros(&shape)
            } else {
                if shape[0] > 1 {
                    // biases share the fan-in of the weight declared before them
                    fan_in = match name.as_str() {
                        "att_em" | "head_w" => shape[1],
                        _ => shape[0],
                    };
                }
                Tensor::uniform(&shape, 1.0 / (fan_in as f64).sqrt(), &mut rng)
            };
            blocks.push(Block { name, value });
        }
        Ok(Self {
            config: config.clone(),
            blocks,
        })
    }

    pub fn view_block(&self, view: usize, which: usize) -> &Tensor {
        &self.blocks[view * VIEW_BLOCKS.len() + which].value
    }

    fn tail(&self, k: usize) -> &Tensor {
        &self.blocks[self.config.views * VIEW_BLOCKS.len() + k].value
    }

    pub fn embedding(&self) -> &Tensor {
        self.tail(0)
    }

    pub fn bilinear(&self) -> &Tensor {
        self.tail(1)
    }

    pub fn head_w(&self) -> &Tensor {
        self.tail(2)
    }

    pub fn transitions(&self) -> &Tensor {
        self.tail(3)
    }

    /// Transition matrix used for decoding: zero when transitions are disabled.
    pub fn decode_transitions(&self) -> Vec<Vec<f64>> {
        let b = self.transitions();
        (0..b.rows())
            .map(|i| {
                if self.config.transitions {
                    b.row_slice(i).to_vec()
                } else {
                    vec![0.0; b.cols()]
                }
            })
            .collect()
    }

    pub fn tensors(&self) -> Vec<Tensor> {
        self.blocks.iter().map(|b| b.value.clone()).collect()
    }

    pub fn set_tensors(&mut self, tensors: Vec<Tensor>) {
        for (b, t) in self.blocks.iter_mut().zip(tensors) {
            b.value = t;
        }
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn parameter_count(&self) -> usize {
        self.blocks.iter().map(|b| b.value.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_bounds() {
        let cfg = ModelConfig::default();
        let p = ModelParams::init(&cfg).unwrap();
        assert_eq!(p.blocks.len(), 2 * 11 + 4);
        assert_eq!(p.view_block(1, LSTM_U).shape(), &[16, 64]);
        assert_eq!(p.head_w().shape(), &[4, 8]);
        assert!(p.transitions().data().iter().all(|&v| v == 0.0));
        let bound = 1.0 / 8f64.sqrt();
        assert!(p.view_block(0, LSTM_W).data().iter().all(|v| v.abs() <= bound));
        assert!(p.view_block(0, LSTM_B).data().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let cfg = ModelConfig::default();
        assert_eq!(ModelParams::init(&cfg).unwrap(), ModelParams::init(&cfg).unwrap());
        let other = ModelConfig { seed: 1, ..cfg.clone() };
        assert_ne!(ModelParams::init(&cfg).unwrap(), ModelParams::init(&other).unwrap());
    }
}
