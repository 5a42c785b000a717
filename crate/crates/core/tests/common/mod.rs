//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use mvladdm::autodiff::Tensor;
use mvladdm::features::{gabor_pair, spatial_kernels, DetectorParams, Volume};
use mvladdm::gaussian::DiagonalGaussian;
use mvladdm::model::{BatchLoss, ModelConfig, ModelParams, WindowBatch};
use mvladdm::synth::{FeatureMatrix, MultiViewSequence};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Mean and variance of `prod_v N(x; mu_v, var_v) / N(x; 0, 1)^(V-1)` in one
/// coordinate, by trapezoid quadrature on a uniform grid over `[-lim, lim]`.
pub fn grid_fusion_1d(means: &[f64], vars: &[f64], lim: f64, steps: usize) -> (f64, f64) {
    let v = means.len() as f64;
    let h = 2.0 * lim / steps as f64;
    let log_density = |x: f64| {
        let experts: f64 = means
            .iter()
            .zip(vars)
            .map(|(m, s)| -0.5 * (x - m).powi(2) / s - 0.5 * s.ln())
            .sum();
        experts + (v - 1.0) * 0.5 * x * x
    };
    let xs: Vec<f64> = (0..=steps).map(|i| -lim + i as f64 * h).collect();
    let logs: Vec<f64> = xs.iter().map(|&x| log_density(x)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, (&x, &l)) in xs.iter().zip(&logs).enumerate() {
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let p = w * (l - top).exp();
        z += p;
        m1 += p * x;
        m2 += p * x * x;
    }
    let mean = m1 / z;
    (mean, m2 / z - mean * mean)
}

/// All `n^t` label sequences in lexicographic order.
pub fn all_paths(t: usize, n: usize) -> Vec<Vec<usize>> {
    let total = n.pow(t as u32);
    (0..total)
        .map(|mut k| {
            let mut p = vec![0; t];
            for slot in p.iter_mut().rev() {
                *slot = k % n;
                k /= n;
            }
            p
        })
        .collect()
}

pub fn brute_score(u: &[Vec<f64>], b: &[Vec<f64>], path: &[usize]) -> f64 {
    let mut s = 0.0;
    for t in 0..path.len() {
        s += u[t][path[t]];
        if t > 0 {
            s += b[path[t - 1]][path[t]];
        }
    }
    s
}

/// `(log Z, lexicographically first best path)` by enumeration.
pub fn brute_chain(u: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let paths = all_paths(u.len(), u[0].len());
    let scores: Vec<f64> = paths.iter().map(|p| brute_score(u, b, p)).collect();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = top + scores.iter().map(|s| (s - top).exp()).sum::<f64>().ln();
    let best = scores.iter().position(|&s| s == top).unwrap();
    (log_z, paths[best].clone())
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

pub fn random_expert(rng: &mut ChaCha8Rng, d: usize) -> DiagonalGaussian {
    DiagonalGaussian::new(
        (0..d).map(|_| rng.random_range(-2.0..2.0)).collect(),
        (0..d).map(|_| rng.random_range(0.2..1.0)).collect(),
    )
    .unwrap()
}

/// Energy response by direct 3-D correlation with the full outer-product
/// kernels, replicate borders.
pub fn dense_response(v: &Volume, params: &DetectorParams) -> Vec<f64> {
    let sk = spatial_kernels(params.sigma_spatial);
    let tk = gabor_pair(params.omega_temporal);
    let (rs, rt) = (sk.radius as isize, tk.radius as isize);
    let log2d: Vec<f64> = (0..2 * sk.radius + 1)
        .flat_map(|j| {
            let sk = &sk;
            (0..2 * sk.radius + 1).map(move |i| sk.g2[i] * sk.g[j] + sk.g[i] * sk.g2[j])
        })
        .collect();
    let side = 2 * sk.radius + 1;
    let mut out = Vec::with_capacity(v.data.len());
    for t in 0..v.frames as isize {
        for y in 0..v.height as isize {
            for x in 0..v.width as isize {
                let (mut even, mut odd) = (0.0, 0.0);
                for dt in -rt..=rt {
                    let (we, wo) = (tk.even[(dt + rt) as usize], tk.odd[(dt + rt) as usize]);
                    for dy in -rs..=rs {
                        for dx in -rs..=rs {
                            let k = log2d[(dy + rs) as usize * side + (dx + rs) as usize];
                            let val = v.clamped(x + dx, y + dy, t + dt);
                            even += we * k * val;
                            odd += wo * k * val;
                        }
                    }
                }
                out.push(even * even + odd * odd);
            }
        }
    }
    out
}

pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        views: 2,
        feature_dims: vec![3, 2],
        labels: 3,
        latent_dim: 3,
        hidden_dim: 4,
        mlp_dim: 5,
        embed_dim: 2,
        lambda_elbo: 0.7,
        ..ModelConfig::default()
    }
}

pub fn random_sequence(
    id: &str,
    t: usize,
    dims: &[usize],
    labels: usize,
    rng: &mut ChaCha8Rng,
) -> MultiViewSequence {
    MultiViewSequence {
        id: id.into(),
        labels: (0..t).map(|_| rng.random_range(0..labels)).collect(),
        views: dims
            .iter()
            .map(|&d| {
                FeatureMatrix::new(t, d, (0..t * d).map(|_| rng.random_range(-1.5..1.5)).collect())
            })
            .collect(),
    }
}

/// Every block redrawn so no gradient is trivially zero.
pub fn random_params(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> ModelParams {
    let mut p = ModelParams::init(cfg).unwrap();
    for b in &mut p.blocks {
        let shape = b.value.shape().to_vec();
        b.value = Tensor::uniform(&shape, 0.8, rng);
    }
    p
}

/// Per block: `||analytic - fd|| / max(||analytic||, ||fd||, 1e-8)` with
/// central differences of the given step.
pub fn gradient_errors(p: &ModelParams, batch: &WindowBatch, step: f64) -> Vec<(String, f64)> {
    let loss = |q: &ModelParams| BatchLoss::build(q, batch).unwrap().terms.loss;
    let analytic = BatchLoss::build(p, batch).unwrap().gradients().unwrap();
    p.blocks
        .iter()
        .enumerate()
        .map(|(k, block)| {
            let (mut diff2, mut a2, mut f2) = (0.0, 0.0, 0.0);
            for i in 0..block.value.len() {
                let mut plus = p.clone();
                plus.blocks[k].value.data_mut()[i] += step;
                let mut minus = p.clone();
                minus.blocks[k].value.data_mut()[i] -= step;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * step);
                let a = analytic[k].data()[i];
                diff2 += (a - fd).powi(2);
                a2 += a * a;
                f2 += fd * fd;
            }
            (block.name.clone(), diff2.sqrt() / a2.sqrt().max(f2.sqrt()).max(1e-8))
        })
        .collect()
}
