//! Deterministic forward pass on plain vectors, used at evaluation time.

use super::params::*;
use super::{AttentionMode, ModelError, ModelParams, MAX_VIEWS};
use crate::autodiff::{log_sum_exp_slice, Tensor};
use crate::gaussian::{
    gaussian_log_density, kl_to_standard, poe_fuse_subset, reparam_sample, DiagonalGaussian,
    FusedPosterior,
};
use crate::synth::{FeatureMatrix, MultiViewSequence};

/// Inference-net output for one view at one frame.
pub type ViewExpert = DiagonalGaussian;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `x W + b` for a row vector `x`.
fn affine(x: &[f64], w: &Tensor, b: &Tensor) -> Vec<f64> {
    let mut out = b.data().to_vec();
    for (i, &xi) in x.iter().enumerate() {
        for (o, wv) in out.iter_mut().zip(w.row_slice(i)) {
            *o += xi * wv;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nonempty subsets of `0..views`, ordered by size then bitmask; the full
/// set comes last.
pub fn subsets(views: usize) -> Vec<Vec<usize>> {
    let mut masks: Vec<usize> = (1..1usize << views).collect();
    masks.sort_by_key(|&m| (m.count_ones(), m));
    masks
        .into_iter()
        .map(|m| (0..views).filter(|v| m >> v & 1 == 1).collect())
        .collect()
}

/// Hidden-state sequence of one view's recurrent cell, from zero state.
pub fn encode_view(
    params: &ModelParams,
    view: usize,
    x: &FeatureMatrix,
) -> Result<Vec<Vec<f64>>, ModelError> {
    let w = params.view_block(view, LSTM_W);
    if x.cols != w.rows() {
        return Err(ModelError::DimMismatch {
            what: format!("view {view} features"),
            expected: w.rows(),
            got: x.cols,
        });
    }
    let u = params.view_block(view, LSTM_U);
    let b = params.view_block(view, LSTM_B);
    let hd = u.rows();
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    let mut out = Vec::with_capacity(x.rows);
    for t in 0..x.rows {
        let mut gates = affine(x.row(t), w, b);
        for (i, &hi) in h.iter().enumerate() {
            for (g, uv) in gates.iter_mut().zip(u.row_slice(i)) {
                *g += hi * uv;
            }
        }
        for k in 0..hd {
            let i = sigmoid(gates[k]);
            let f = sigmoid(gates[hd + k]);
            let o = sigmoid(gates[2 * hd + k]);
            let g = gates[3 * hd + k].tanh();
            c[k] = f * c[k] + i * g;
            h[k] = c[k].tanh() * o;
        }
        out.push(h.clone());
    }
    Ok(out)
}

/// Gaussian expert of one view: mean and precision `1 + softplus(raw)`.
pub fn view_expert(params: &ModelParams, view: usize, h: &[f64]) -> Result<ViewExpert, ModelError> {
    let a: Vec<f64> = affine(h, params.view_block(view, INF_W1), params.view_block(view, INF_B1))
        .into_iter()
        .map(f64::tanh)
        .collect();
    let out = affine(&a, params.view_block(view, INF_W2), params.view_block(view, INF_B2));
    let d = out.len() / 2;
    let precision: Vec<f64> = out[d..].iter().map(|&r| 1.0 + softplus(r)).collect();
    Ok(DiagonalGaussian::from_precision(out[..d].to_vec(), &precision)?)
}

/// Generative net of one view: reconstruction of its hidden state from `z`.
pub fn reconstruct_view(params: &ModelParams, view: usize, z: &[f64]) -> Vec<f64> {
    let a: Vec<f64> = affine(z, params.view_block(view, GEN_W1), params.view_block(view, GEN_B1))
        .into_iter()
        .map(f64::tanh)
        .collect();
    affine(&a, params.view_block(view, GEN_W2), params.view_block(view, GEN_B2))
}

/// One fused posterior per nonempty subset of experts, in [`subsets`] order.
pub fn infer_latents(experts: &[ViewExpert]) -> Result<Vec<FusedPosterior>, ModelError> {
    if experts.len() > MAX_VIEWS {
        return Err(ModelError::TooManyViews {
            views: experts.len(),
        });
    }
    subsets(experts.len())
        .iter()
        .map(|s| Ok(poe_fuse_subset(experts, s)?))
        .collect()
}

fn check_label(label: usize, params: &ModelParams) -> Result<(), ModelError> {
    if label >= params.config.labels {
        return Err(ModelError::LabelOutOfRange {
            label,
            labels: params.config.labels,
        });
    }
    Ok(())
}

/// Bilinear compatibility `Em[label]^T U gamma_i` for every posterior.
pub fn attention_scores(
    posteriors: &[FusedPosterior],
    label: usize,
    params: &ModelParams,
) -> Result<Vec<f64>, ModelError> {
    check_label(label, params)?;
    let em = params.embedding().row_slice(label);
    let u = params.bilinear();
    // e^T U, a row of length d
    let mut k = vec![0.0; u.cols()];
    for (i, &e) in em.iter().enumerate() {
        for (kv, uv) in k.iter_mut().zip(u.row_slice(i)) {
            *kv += e * uv;
        }
    }
    Ok(posteriors.iter().map(|p| dot(&k, &p.gamma)).collect())
}

/// Softmax of attention scores.
pub fn attention_weights(scores: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp_slice(scores);
    scores.iter().map(|r| (r - lse).exp()).collect()
}

fn fusion_weights(
    posteriors: &[FusedPosterior],
    label: usize,
    params: &ModelParams,
) -> Result<Vec<f64>, ModelError> {
    let s = posteriors.len();
    Ok(match params.config.attention {
        AttentionMode::Learned => attention_weights(&attention_scores(posteriors, label, params)?),
        AttentionMode::Uniform => {
            check_label(label, params)?;
            vec![1.0 / s as f64; s]
        }
        AttentionMode::SharedOnly => {
            check_label(label, params)?;
            let mut w = vec![0.0; s];
            w[s - 1] = 1.0;
            w
        }
    })
}

/// Label-specific latent: fusion-weighted mean of the posterior means.
pub fn attend(
    posteriors: &[FusedPosterior],
    label: usize,
    params: &ModelParams,
) -> Result<Vec<f64>, ModelError> {
    let alpha = fusion_weights(posteriors, label, params)?;
    let d = posteriors[0].dim();
    let mut z = vec![0.0; d];
    for (a, p) in alpha.iter().zip(posteriors) {
        if *a == 0.0 {
            continue;
        }
        for (zj, g) in z.iter_mut().zip(&p.gamma) {
            *zj += a * g;
        }
    }
    Ok(z)
}

/// `score[n] = W[n] . z_by_label[n]`.
pub fn unary_scores(z_by_label: &[Vec<f64>], head_w: &Tensor) -> Result<Vec<f64>, ModelError> {
    if z_by_label.len() != head_w.rows() {
        return Err(ModelError::DimMismatch {
            what: "label count".into(),
            expected: head_w.rows(),
            got: z_by_label.len(),
        });
    }
    z_by_label
        .iter()
        .enumerate()
        .map(|(n, z)| {
            if z.len() != head_w.cols() {
                return Err(ModelError::DimMismatch {
                    what: "latent dim".into(),
                    expected: head_w.cols(),
                    got: z.len(),
                });
            }
            Ok(dot(head_w.row_slice(n), z))
        })
        .collect()
}

/// Single-sample estimate of `sum_v log N(h_v; dec_v(z), I) - KL(q || N(0, I))`
/// with `z = gamma + sqrt(lambda) * noise`.
pub fn elbo(
    h_tilde: &[Vec<f64>],
    posterior: &FusedPosterior,
    params: &ModelParams,
    noise: &[f64],
) -> Result<f64, ModelError> {
    let z = reparam_sample(posterior, noise)?;
    let mut recon = 0.0;
    for (v, h) in h_tilde.iter().enumerate() {
        let mean = reconstruct_view(params, v, &z);
        let unit = DiagonalGaussian::new(mean, vec![1.0; h.len()])?;
        recon += gaussian_log_density(h, &unit)?;
    }
    Ok(recon - kl_to_standard(posterior))
}

/// Per-frame unary scores (`T x N`) from posterior means.
pub fn predict_unaries(
    seq: &MultiViewSequence,
    params: &ModelParams,
) -> Result<Vec<Vec<f64>>, ModelError> {
    let cfg = &params.config;
    if seq.views.len() != cfg.views {
        return Err(ModelError::DimMismatch {
            what: "view count".into(),
            expected: cfg.views,
            got: seq.views.len(),
        });
    }
    let hidden: Vec<Vec<Vec<f64>>> = seq
        .views
        .iter()
        .enumerate()
        .map(|(v, x)| encode_view(params, v, x))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(seq.len());
    for t in 0..seq.len() {
        let experts: Vec<ViewExpert> = (0..cfg.views)
            .map(|v| view_expert(params, v, &hidden[v][t]))
            .collect::<Result<_, _>>()?;
        let posteriors = infer_latents(&experts)?;
        let z: Vec<Vec<f64>> = (0..cfg.labels)
            .map(|n| attend(&posteriors, n, params))
            .collect::<Result<_, _>>()?;
        out.push(unary_scores(&z, params.head_w())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    #[test]
    fn subset_order() {
        assert_eq!(subsets(1), vec![vec![0]]);
        assert_eq!(subsets(2), vec![vec![0], vec![1], vec![0, 1]]);
        let s3 = subsets(3);
        assert_eq!(s3.len(), 7);
        assert_eq!(s3.iter().filter(|s| s.len() > 1).count(), 4);
        assert_eq!(s3.last().unwrap(), &vec![0, 1, 2]);
    }

    #[test]
    fn zero_cell_never_charges() {
        let cfg = ModelConfig::default();
        let mut p = ModelParams::init(&cfg).unwrap();
        for b in &mut p.blocks {
            b.value = Tensor::zeros(b.value.shape());
        }
        let x = FeatureMatrix::new(3, 8, (0..24).map(|i| i as f64).collect());
        for h in encode_view(&p, 0, &x).unwrap() {
            assert!(h.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn softmax_of_log_ratios() {
        let a = attention_weights(&[1f64.ln(), 2f64.ln(), 3f64.ln()]);
        for (x, e) in a.iter().zip([1.0 / 6.0, 2.0 / 6.0, 0.5]) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn too_many_views() {
        let e = DiagonalGaussian::standard(1);
        assert!(matches!(
            infer_latents(&vec![e; 5]),
            Err(ModelError::TooManyViews { views: 5 })
        ));
    }
}
