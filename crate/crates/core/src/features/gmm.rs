//! Diagonal-covariance Gaussian mixtures fitted by EM.

use std::f64::consts::PI;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::autodiff::log_sum_exp_slice;

/// Lower bound applied to every component variance.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    /// `K x D`
    pub means: Vec<Vec<f64>>,
    /// `K x D` standard deviations.
    pub stds: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Data log-likelihood before each M-step, plus the final value.
    pub log_likelihoods: Vec<f64>,
}

impl GmmModel {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// `log(w_k) + log N(x; mu_k, sigma_k^2)` for every component.
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len() as f64;
        (0..self.components())
            .map(|k| {
                let mut acc = self.weights[k].ln() - 0.5 * d * (2.0 * PI).ln();
                for ((xi, m), s) in x.iter().zip(&self.means[k]).zip(&self.stds[k]) {
                    let z = (xi - m) / s;
                    acc -= s.ln() + 0.5 * z * z;
                }
                acc
            })
            .collect()
    }

    pub fn log_likelihood(&self, xs: &[Vec<f64>]) -> f64 {
        xs.iter().map(|x| log_sum_exp_slice(&self.log_joint(x))).sum()
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let k = self.components();
        let d = self.dim();
        let sum: f64 = self.weights.iter().sum();
        let ok = k > 0
            && d > 0
            && self.means.len() == k
            && self.stds.len() == k
            && self.means.iter().all(|m| m.len() == d)
            && self.stds.iter().all(|s| s.len() == d && s.iter().all(|&v| v > 0.0))
            && self.weights.iter().all(|&w| w > 0.0)
            && (sum - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(FeatureError::InvalidParameter("malformed GMM".into()))
        }
    }
}

/// Posterior responsibilities of `x` under `gmm`.
pub fn soft_assign(x: &[f64], gmm: &GmmModel) -> Result<Vec<f64>, FeatureError> {
    if x.len() != gmm.dim() {
        return Err(FeatureError::DimMismatch {
            expected: gmm.dim(),
            got: x.len(),
        });
    }
    let lj = gmm.log_joint(x);
    let lse = log_sum_exp_slice(&lj);
    Ok(lj.into_iter().map(|v| (v - lse).exp()).collect())
}

fn kmeans_pp(xs: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![xs[rng.random_range(0..xs.len())].clone()];
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
    let mut dist: Vec<f64> = xs.iter().map(|x| sq(x, &centers[0])).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&dist) {
            Ok(w) => w.sample(rng),
            // every point coincides with a center
            Err(_) => rng.random_range(0..xs.len()),
        };
        centers.push(xs[next].clone());
        let c = centers.last().expect("just pushed");
        for (d, x) in dist.iter_mut().zip(xs) {
            *d = d.min(sq(x, c));
        }
    }
    centers
}

/// EM for a `k`-component diagonal GMM, seeded by k-means++.
pub fn gmm_fit(xs: &[Vec<f64>], k: usize, max_iters: usize, seed: u64) -> Result<GmmFit, FeatureError> {
    if k == 0 || xs.len() < k {
        return Err(FeatureError::InsufficientData {
            points: xs.len(),
            needed: k.max(1),
        });
    }
    let d = xs[0].len();
    if d == 0 {
        return Err(FeatureError::InvalidParameter("points must have D >= 1".into()));
    }
    if let Some(x) = xs.iter().find(|x| x.len() != d) {
        return Err(FeatureError::DimMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let n = xs.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    let var: Vec<f64> = (0..d)
        .map(|j| {
            (xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n).max(VARIANCE_FLOOR)
        })
        .collect();
    let mut model = GmmModel {
        weights: vec![1.0 / k as f64; k],
        means: kmeans_pp(xs, k, &mut rng),
        stds: vec![var.iter().map(|v| v.sqrt()).collect(); k],
    };

    let mut trace = Vec::with_capacity(max_iters + 1);
    let mut resp = vec![vec![0.0; k]; xs.len()];
    for _ in 0..max_iters {
        // E-step
        let mut ll = 0.0;
        for (x, r) in xs.iter().zip(resp.iter_mut()) {
            let lj = model.log_joint(x);
            let lse = log_sum_exp_slice(&lj);
            ll += lse;
            for (ri, l) in r.iter_mut().zip(&lj) {
                *ri = (l - lse).exp();
            }
        }
        let converged = trace
            .last()
            .is_some_and(|&prev: &f64| (ll - prev).abs() <= 1e-12 * ll.abs().max(1.0));
        trace.push(ll);
        if converged {
            break;
        }
        // M-step
        for c in 0..k {
            let nk: f64 = resp.iter().map(|r| r[c]).sum();
            if nk <= f64::MIN_POSITIVE {
                // starved component keeps its parameters with a tiny weight
                model.weights[c] = f64::MIN_POSITIVE;
                continue;
            }
            model.weights[c] = nk / n;
            for j in 0..d {
                let m = xs.iter().zip(&resp).map(|(x, r)| r[c] * x[j]).sum::<f64>() / nk;
                let v = xs
                    .iter()
                    .zip(&resp)
                    .map(|(x, r)| r[c] * (x[j] - m).powi(2))
                    .sum::<f64>()
                    / nk;
                model.means[c][j] = m;
                model.stds[c][j] = v.max(VARIANCE_FLOOR).sqrt();
            }
        }
        let total: f64 = model.weights.iter().sum();
        for w in &mut model.weights {
            *w /= total;
        }
    }
    if trace.len() == max_iters {
        trace.push(model.log_likelihood(xs));
    }
    Ok(GmmFit {
        model,
        log_likelihoods: trace,
    })
}
