use nalgebra::{DMatrix, SymmetricEigen};

use super::FeatureError;

/// Relative eigenvalue cutoff used to flag rank deficiency.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct PcaResult {
    pub mean: Vec<f64>,
    /// `D x keep`, orthonormal columns ordered by descending variance.
    pub basis: Vec<Vec<f64>>,
    /// Variance captured by each kept component.
    pub variances: Vec<f64>,
    /// `N x keep` projection of the centered data.
    pub projected: Vec<Vec<f64>>,
    /// Fewer than `keep` components carry variance; the tail of the basis is
    /// an arbitrary orthonormal completion.
    pub rank_deficient: bool,
}

impl PcaResult {
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        let keep = self.variances.len();
        (0..keep)
            .map(|c| {
                x.iter()
                    .zip(&self.mean)
                    .enumerate()
                    .map(|(j, (xi, m))| (xi - m) * self.basis[j][c])
                    .sum()
            })
            .collect()
    }
}

pub fn pca_fit_transform(xs: &[Vec<f64>], keep: usize) -> Result<PcaResult, FeatureError> {
    let n = xs.len();
    let d = xs.first().map_or(0, Vec::len);
    if keep == 0 || keep > n.min(d) {
        return Err(FeatureError::InvalidParameter(format!(
            "keep={keep} must lie in 1..={} for {n} x {d} data",
            n.min(d)
        )));
    }
    if let Some(x) = xs.iter().find(|x| x.len() != d) {
        return Err(FeatureError::DimMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, d, |i, j| xs[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let nonzero = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > RANK_TOL * top.max(f64::MIN_POSITIVE))
        .count();
    let rank_deficient = nonzero < keep;
    if rank_deficient {
        log::warn!("PCA: only {nonzero} nonzero components, {keep} requested");
    }

    let basis: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            order[..keep]
                .iter()
                .map(|&c| {
                    // sign convention: largest-magnitude loading positive
                    let col = eig.eigenvectors.column(c);
                    let pivot = col.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
                    col[j] * pivot.signum()
                })
                .collect()
        })
        .collect();
    let variances = order[..keep]
        .iter()
        .map(|&c| eig.eigenvalues[c].max(0.0))
        .collect();
    let mut result = PcaResult {
        mean,
        basis,
        variances,
        projected: Vec::new(),
        rank_deficient,
    };
    result.projected = xs.iter().map(|x| result.transform(x)).collect();
    Ok(result)
}
