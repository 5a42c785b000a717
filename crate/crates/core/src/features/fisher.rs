//! Fisher-vector encoding of a point set under a diagonal GMM.

use super::{gmm::soft_assign, FeatureError, GmmModel};

/// Encoded window: `[G_mu (K*D) | G_sigma (K*D)]`, component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherVector {
    pub values: Vec<f64>,
    pub components: usize,
    pub dim: usize,
    pub power_normalized: bool,
    pub l2_normalized: bool,
}

impl FisherVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean_part(&self) -> &[f64] {
        &self.values[..self.components * self.dim]
    }

    pub fn sigma_part(&self) -> &[f64] {
        &self.values[self.components * self.dim..]
    }
}

/// Unnormalized gradients:
///
/// ```text
/// G_mu[k]    = 1/(N sqrt(w_k)) sum_n gamma_n(k) (x_n - mu_k) / sigma_k
/// G_sigma[k] = 1/(N sqrt(w_k)) sum_n gamma_n(k) ((x_n - mu_k)^2 / sigma_k^2 - 1)
/// ```
///
/// An empty window yields zeros.
pub fn fisher_gradients(xs: &[Vec<f64>], gmm: &GmmModel) -> Result<FisherVector, FeatureError> {
    let (k, d) = (gmm.components(), gmm.dim());
    let mut values = vec![0.0; 2 * k * d];
    let n = xs.len() as f64;
    for x in xs {
        let gamma = soft_assign(x, gmm)?;
        for c in 0..k {
            if gamma[c] == 0.0 {
                continue;
            }
            for j in 0..d {
                let z = (x[j] - gmm.means[c][j]) / gmm.stds[c][j];
                values[c * d + j] += gamma[c] * z;
                values[k * d + c * d + j] += gamma[c] * (z * z - 1.0);
            }
        }
    }
    if !xs.is_empty() {
        for c in 0..k {
            let scale = 1.0 / (n * gmm.weights[c].sqrt());
            for j in 0..d {
                values[c * d + j] *= scale;
                values[k * d + c * d + j] *= scale;
            }
        }
    }
    Ok(FisherVector {
        values,
        components: k,
        dim: d,
        power_normalized: false,
        l2_normalized: false,
    })
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v {
            *x /= norm;
        }
    }
}

/// Fisher vector with signed square-root power normalisation followed by
/// L2 normalisation of each half. All-zero halves stay zero.
pub fn fisher_encode(xs: &[Vec<f64>], gmm: &GmmModel) -> Result<FisherVector, FeatureError> {
    let mut fv = fisher_gradients(xs, gmm)?;
    for v in &mut fv.values {
        *v = v.signum() * v.abs().sqrt();
    }
    let half = fv.components * fv.dim;
    let (mu, sigma) = fv.values.split_at_mut(half);
    l2_normalize(mu);
    l2_normalize(sigma);
    fv.power_normalized = true;
    fv.l2_normalized = true;
    Ok(fv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(mu: f64) -> GmmModel {
        GmmModel {
            weights: vec![1.0],
            means: vec![vec![mu]],
            stds: vec![vec![1.0]],
        }
    }

    #[test]
    fn point_at_mean() {
        let fv = fisher_gradients(&[vec![0.3]], &unit(0.3)).unwrap();
        assert_eq!(fv.values, vec![0.0, -1.0]);
    }

    #[test]
    fn point_one_sigma_away() {
        let fv = fisher_gradients(&[vec![1.0]], &unit(0.0)).unwrap();
        assert_eq!(fv.values, vec![1.0, 0.0]);
    }

    #[test]
    fn symmetric_points_cancel_mean_gradient() {
        let xs = vec![vec![-1.5], vec![1.5], vec![-0.2], vec![0.2]];
        let fv = fisher_gradients(&xs, &unit(0.0)).unwrap();
        assert!(fv.values[0].abs() < 1e-15);
    }

    #[test]
    fn empty_window_is_zero() {
        let fv = fisher_encode(&[], &unit(0.0)).unwrap();
        assert_eq!(fv.values, vec![0.0, 0.0]);
    }

    #[test]
    fn halves_are_unit_norm() {
        let gmm = GmmModel {
            weights: vec![0.3, 0.7],
            means: vec![vec![0.0, 1.0], vec![2.0, -1.0]],
            stds: vec![vec![1.0, 0.5], vec![2.0, 1.0]],
        };
        let xs = vec![vec![0.1, 0.2], vec![1.9, -0.5], vec![3.0, 3.0]];
        let fv = fisher_encode(&xs, &gmm).unwrap();
        assert_eq!(fv.len(), 8);
        for half in [fv.mean_part(), fv.sigma_part()] {
            let n: f64 = half.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
