//! Closed-form algebra for diagonal Gaussian experts fused under a
//! standard-normal prior.
//!
//! For experts `N(mu_v, var_v)`, `v = 1..V`, the product of experts divided by
//! `V - 1` copies of the prior `N(0, I)` is again Gaussian with
//!
//! ```text
//! lambda = (sum_v 1/var_v - (V - 1))^-1
//! gamma  = lambda * sum_v mu_v / var_v
//! ```

use std::f64::consts::PI;

use thiserror::Error;

/// Floor on the fused precision below which fusion is rejected.
pub const PRECISION_EPS: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("at least one expert is required")]
    NoExperts,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("variance must be positive and finite (component {index}: {value})")]
    InvalidVariance { index: usize, value: f64 },
    #[error("fused precision {value} <= {PRECISION_EPS} in component {index}")]
    NonPositivePrecision { index: usize, value: f64 },
    #[error("expert index {index} out of range for {count} experts")]
    UnknownExpert { index: usize, count: usize },
}

/// Gaussian with diagonal covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalGaussian {
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self, GaussianError> {
        if mean.len() != variance.len() {
            return Err(GaussianError::DimMismatch {
                expected: mean.len(),
                got: variance.len(),
            });
        }
        if let Some((index, &value)) = variance
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(GaussianError::InvalidVariance { index, value });
        }
        Ok(Self { mean, variance })
    }

    pub fn from_precision(mean: Vec<f64>, precision: &[f64]) -> Result<Self, GaussianError> {
        Self::new(mean, precision.iter().map(|p| 1.0 / p).collect())
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            variance: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }
}

/// Result of fusing a subset of experts.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedPosterior {
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Indices of the fused experts, ascending.
    pub members: Vec<usize>,
}

impl FusedPosterior {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn as_gaussian(&self) -> DiagonalGaussian {
        DiagonalGaussian {
            mean: self.gamma.clone(),
            variance: self.lambda.clone(),
        }
    }

    pub fn is_shared(&self) -> bool {
        self.members.len() > 1
    }
}

/// Fuses all experts.
pub fn poe_fuse(experts: &[DiagonalGaussian]) -> Result<FusedPosterior, GaussianError> {
    let all: Vec<usize> = (0..experts.len()).collect();
    poe_fuse_subset(experts, &all)
}

/// Fuses the experts named by `subset`.
pub fn poe_fuse_subset(
    experts: &[DiagonalGaussian],
    subset: &[usize],
) -> Result<FusedPosterior, GaussianError> {
    let first = *subset.first().ok_or(GaussianError::NoExperts)?;
    if let Some(&index) = subset.iter().find(|&&i| i >= experts.len()) {
        return Err(GaussianError::UnknownExpert {
            index,
            count: experts.len(),
        });
    }
    let mut members = subset.to_vec();
    members.sort_unstable();
    members.dedup();
    if members.len() == 1 {
        // no prior division; returned unchanged, bit for bit
        let e = &experts[first];
        return Ok(FusedPosterior {
            gamma: e.mean.clone(),
            lambda: e.variance.clone(),
            members,
        });
    }
    let d = experts[first].dim();
    let mut precision = vec![-(subset.len() as f64 - 1.0); d];
    let mut weighted = vec![0.0; d];
    for &v in subset {
        let e = &experts[v];
        if e.dim() != d {
            return Err(GaussianError::DimMismatch {
                expected: d,
                got: e.dim(),
            });
        }
        for j in 0..d {
            let p = 1.0 / e.variance[j];
            precision[j] += p;
            weighted[j] += p * e.mean[j];
        }
    }
    if let Some((index, &value)) = precision
        .iter()
        .enumerate()
        .find(|(_, p)| !(**p > PRECISION_EPS))
    {
        return Err(GaussianError::NonPositivePrecision { index, value });
    }
    let lambda: Vec<f64> = precision.iter().map(|p| 1.0 / p).collect();
    let gamma = lambda.iter().zip(&weighted).map(|(l, w)| l * w).collect();
    Ok(FusedPosterior {
        gamma,
        lambda,
        members,
    })
}

/// `KL(N(gamma, diag(lambda)) || N(0, I))`.
pub fn kl_to_standard(post: &FusedPosterior) -> f64 {
    let d = post.dim() as f64;
    let trace: f64 = post.lambda.iter().sum();
    let sq: f64 = post.gamma.iter().map(|g| g * g).sum();
    let log_det: f64 = post.lambda.iter().map(|l| l.ln()).sum();
    0.5 * (trace + sq - d - log_det)
}

/// Location-scale sample `gamma + sqrt(lambda) * noise`.
pub fn reparam_sample(post: &FusedPosterior, noise: &[f64]) -> Result<Vec<f64>, GaussianError> {
    if noise.len() != post.dim() {
        return Err(GaussianError::DimMismatch {
            expected: post.dim(),
            got: noise.len(),
        });
    }
    Ok(post
        .gamma
        .iter()
        .zip(&post.lambda)
        .zip(noise)
        .map(|((g, l), e)| g + l.sqrt() * e)
        .collect())
}

pub fn gaussian_log_density(x: &[f64], g: &DiagonalGaussian) -> Result<f64, GaussianError> {
    if x.len() != g.dim() {
        return Err(GaussianError::DimMismatch {
            expected: g.dim(),
            got: x.len(),
        });
    }
    let mut acc = -0.5 * x.len() as f64 * (2.0 * PI).ln();
    for ((xi, m), v) in x.iter().zip(&g.mean).zip(&g.variance) {
        acc -= 0.5 * (v.ln() + (xi - m).powi(2) / v);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(mean: &[f64], var: &[f64]) -> DiagonalGaussian {
        DiagonalGaussian::new(mean.to_vec(), var.to_vec()).unwrap()
    }

    #[test]
    fn two_standard_experts_give_standard() {
        let f = poe_fuse(&[g(&[0.0], &[1.0]), g(&[0.0], &[1.0])]).unwrap();
        assert_eq!(f.gamma, vec![0.0]);
        assert_eq!(f.lambda, vec![1.0]);
        assert_eq!(f.members, vec![0, 1]);
    }

    #[test]
    fn single_expert_unchanged() {
        let e = g(&[0.7, -1.2], &[0.3, 2.5]);
        let f = poe_fuse(std::slice::from_ref(&e)).unwrap();
        assert_eq!(f.gamma, e.mean());
        assert_eq!(f.lambda, e.variance());
    }

    #[test]
    fn two_unit_experts_at_one() {
        let f = poe_fuse(&[g(&[1.0], &[1.0]), g(&[1.0], &[1.0])]).unwrap();
        assert!((f.gamma[0] - 2.0).abs() < 1e-15);
        assert!((f.lambda[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wide_experts_hit_nonpositive_precision() {
        let err = poe_fuse(&[g(&[0.0], &[2.0]), g(&[0.0], &[2.0])]).unwrap_err();
        assert!(matches!(err, GaussianError::NonPositivePrecision { index: 0, .. }));
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert_eq!(poe_fuse(&[]).unwrap_err(), GaussianError::NoExperts);
        let err = poe_fuse(&[g(&[0.0], &[1.0]), g(&[0.0, 0.0], &[1.0, 1.0])]).unwrap_err();
        assert!(matches!(err, GaussianError::DimMismatch { .. }));
        assert!(DiagonalGaussian::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn kl_closed_form_cases() {
        let zero = FusedPosterior {
            gamma: vec![0.0; 3],
            lambda: vec![1.0; 3],
            members: vec![0],
        };
        assert_eq!(kl_to_standard(&zero), 0.0);
        let shifted = FusedPosterior {
            gamma: vec![1.0],
            lambda: vec![1.0],
            members: vec![0],
        };
        assert!((kl_to_standard(&shifted) - 0.5).abs() < 1e-15);
        let narrow = FusedPosterior {
            gamma: vec![0.0],
            lambda: vec![0.5],
            members: vec![0],
        };
        let expected = 0.5 * (0.5 - 1.0 - 0.5f64.ln());
        assert!((kl_to_standard(&narrow) - expected).abs() < 1e-15);
        assert!((expected - 0.09657).abs() < 1e-5);
    }

    #[test]
    fn reparam_cases() {
        let post = FusedPosterior {
            gamma: vec![0.5, -1.0],
            lambda: vec![1.0, 1.0],
            members: vec![0],
        };
        assert_eq!(reparam_sample(&post, &[0.0, 0.0]).unwrap(), post.gamma);
        assert_eq!(reparam_sample(&post, &[1.0, 0.0]).unwrap(), vec![1.5, -1.0]);
        assert!(reparam_sample(&post, &[1.0]).is_err());
    }

    #[test]
    fn log_density_at_origin() {
        let v = gaussian_log_density(&[0.0], &DiagonalGaussian::standard(1)).unwrap();
        assert!((v + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        assert!((v + 0.9189).abs() < 1e-4);
    }

    #[test]
    fn log_density_peaks_at_mean() {
        let e = g(&[0.4, -2.0], &[0.5, 3.0]);
        let at_mean = gaussian_log_density(e.mean(), &e).unwrap();
        for dx in [-0.1, 0.05, 0.3] {
            let x = [0.4 + dx, -2.0 - dx];
            assert!(gaussian_log_density(&x, &e).unwrap() < at_mean);
        }
    }
}
