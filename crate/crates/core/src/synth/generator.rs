//! Synthetic multi-view label sequences.
//!
//! Labels follow a Markov chain. Each (class, view) pair is either visible,
//! in which case the view emits `N(mean[class][view], std^2 I)`, or
//! invisible, in which case it emits the class-agnostic background
//! `N(0, std^2 I)` shared by every invisible class.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, MultiViewSequence, SynthError};

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub views: usize,
    pub classes: usize,
    pub frames: usize,
    pub feature_dims: Vec<usize>,
    /// Row-stochastic `classes x classes`.
    pub transition: Vec<Vec<f64>>,
    /// `[class][view]` mean vectors.
    pub emission_means: Vec<Vec<Vec<f64>>>,
    pub std: f64,
    /// `[class][view]`
    pub visibility: Vec<Vec<bool>>,
    /// Initial (and intended stationary) class weights.
    pub imbalance: Vec<f64>,
    pub seed: u64,
}

/// Compact description from which a full [`GeneratorSpec`] is derived.
///
/// This is also the `[generator]` section of the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub views: usize,
    pub classes: usize,
    pub frames: usize,
    pub feature_dim: usize,
    /// Number of sequences to generate.
    pub count: usize,
    /// Distance of each visible class mean from the background mean, in stds.
    pub separation: f64,
    pub std: f64,
    /// Smallest diagonal entry of the derived transition matrix.
    pub self_transition: f64,
    /// Symmetric class pairs that never follow each other.
    pub forbidden: Vec<[usize; 2]>,
    pub imbalance: Vec<f64>,
    /// `[class][view]`
    pub visibility: Vec<Vec<bool>>,
    /// Explicit transition matrix; overrides `self_transition`/`forbidden`.
    pub transition: Option<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    /// Two views, four classes; class 1 is visible only in view 0 and class 2
    /// only in view 1.
    fn default() -> Self {
        Self {
            views: 2,
            classes: 4,
            frames: 200,
            feature_dim: 8,
            count: 40,
            separation: 4.0,
            std: 1.0,
            self_transition: 0.9,
            forbidden: vec![[1, 2]],
            imbalance: vec![0.55, 0.25, 0.15, 0.05],
            visibility: vec![
                vec![true, true],
                vec![true, false],
                vec![false, true],
                vec![true, true],
            ],
            transition: None,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn build(&self) -> Result<GeneratorSpec, SynthError> {
        let n = self.classes;
        if n == 0 || self.views == 0 || self.feature_dim == 0 || self.frames == 0 {
            return Err(SynthError::InvalidSpec(
                "views, classes, frames and feature_dim must be >= 1".into(),
            ));
        }
        if self.imbalance.len() != n {
            return Err(SynthError::InvalidSpec(format!(
                "imbalance has {} entries for {n} classes",
                self.imbalance.len()
            )));
        }
        let transition = match &self.transition {
            Some(t) => t.clone(),
            None => reversible_transition(&self.imbalance, &self.forbidden, self.self_transition)?,
        };
        let emission_means = (0..n)
            .map(|c| {
                (0..self.views)
                    .map(|_| {
                        let mut m = vec![0.0; self.feature_dim];
                        let axis = c % self.feature_dim;
                        // classes sharing an axis alternate direction
                        let sign = if (c / self.feature_dim) % 2 == 0 { 1.0 } else { -1.0 };
                        m[axis] = sign * self.separation * self.std;
                        m
                    })
                    .collect()
            })
            .collect();
        let spec = GeneratorSpec {
            views: self.views,
            classes: n,
            frames: self.frames,
            feature_dims: vec![self.feature_dim; self.views],
            transition,
            emission_means,
            std: self.std,
            visibility: self.visibility.clone(),
            imbalance: self.imbalance.clone(),
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Transition matrix in detailed balance with `weights`:
/// `P[i][j] = c * w[j]` off the diagonal (zero for forbidden pairs), with `c`
/// chosen so that the smallest self-transition equals `min_self`.
pub fn reversible_transition(
    weights: &[f64],
    forbidden: &[[usize; 2]],
    min_self: f64,
) -> Result<Vec<Vec<f64>>, SynthError> {
    let n = weights.len();
    if !(0.0..1.0).contains(&min_self) {
        return Err(SynthError::InvalidSpec(format!(
            "self_transition must lie in [0, 1), got {min_self}"
        )));
    }
    let allowed = |i: usize, j: usize| {
        i != j
            && !forbidden
                .iter()
                .any(|&[a, b]| (a == i && b == j) || (a == j && b == i))
    };
    if let Some(&[a, b]) = forbidden.iter().find(|&&[a, b]| a >= n || b >= n) {
        return Err(SynthError::InvalidSpec(format!(
            "forbidden pair ({a}, {b}) out of range"
        )));
    }
    let leave: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| allowed(i, j)).map(|j| weights[j]).sum())
        .collect();
    let max_leave = leave.iter().copied().fold(0.0, f64::max);
    let c = if max_leave > 0.0 {
        (1.0 - min_self) / max_leave
    } else {
        0.0
    };
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0 - c * leave[i]
                    } else if allowed(i, j) {
                        c * weights[j]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect())
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let n = self.classes;
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.views == 0 || n == 0 || self.frames == 0 {
            return bad("views, classes and frames must be >= 1".into());
        }
        if self.feature_dims.len() != self.views || self.feature_dims.contains(&0) {
            return bad("feature_dims must list a positive dim per view".into());
        }
        if self.transition.len() != n || self.transition.iter().any(|r| r.len() != n) {
            return bad(format!("transition must be {n}x{n}"));
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad(format!("transition row {i} is not a distribution"));
            }
        }
        if !(self.std > 0.0 && self.std.is_finite()) {
            return bad(format!("std must be positive, got {}", self.std));
        }
        if self.imbalance.len() != n
            || self.imbalance.iter().any(|&w| !(w >= 0.0))
            || (self.imbalance.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("imbalance must be a distribution over classes".into());
        }
        if self.visibility.len() != n || self.visibility.iter().any(|r| r.len() != self.views) {
            return bad(format!("visibility must be {n}x{}", self.views));
        }
        if let Some(c) = self.visibility.iter().position(|r| !r.iter().any(|&v| v)) {
            return bad(format!("class {c} is invisible in every view"));
        }
        if self.emission_means.len() != n
            || self.emission_means.iter().any(|per_view| {
                per_view.len() != self.views
                    || per_view.iter().zip(&self.feature_dims).any(|(m, &d)| m.len() != d)
            })
        {
            return bad("emission means must match classes, views and feature dims".into());
        }
        Ok(())
    }
}

/// Draws `count` sequences; deterministic in `spec.seed`.
pub fn generate(spec: &GeneratorSpec, count: usize) -> Result<Vec<MultiViewSequence>, SynthError> {
    spec.validate()?;
    if count == 0 {
        return Err(SynthError::InvalidSpec("count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let initial = WeightedIndex::new(&spec.imbalance)
        .map_err(|e| SynthError::InvalidSpec(format!("imbalance: {e}")))?;
    let rows: Vec<WeightedIndex<f64>> = spec
        .transition
        .iter()
        .map(|r| WeightedIndex::new(r).map_err(|e| SynthError::InvalidSpec(format!("transition: {e}"))))
        .collect::<Result<_, _>>()?;

    let mut out = Vec::with_capacity(count);
    for s in 0..count {
        let mut labels = Vec::with_capacity(spec.frames);
        let mut y = initial.sample(&mut rng);
        labels.push(y);
        for _ in 1..spec.frames {
            y = rows[y].sample(&mut rng);
            labels.push(y);
        }
        let views = (0..spec.views)
            .map(|v| {
                let d = spec.feature_dims[v];
                let mut data = Vec::with_capacity(spec.frames * d);
                for &y in &labels {
                    let visible = spec.visibility[y][v];
                    for j in 0..d {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        let mean = if visible { spec.emission_means[y][v][j] } else { 0.0 };
                        data.push(mean + spec.std * z);
                    }
                }
                FeatureMatrix::new(spec.frames, d, data)
            })
            .collect();
        out.push(MultiViewSequence {
            id: format!("seq-{s:04}"),
            labels,
            views,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_builds() {
        let spec = GeneratorConfig::default().build().unwrap();
        // the forbidden pair gives exactly two zero entries
        let zeros = spec.transition.iter().flatten().filter(|&&p| p == 0.0).count();
        assert_eq!(zeros, 2);
        let min_diag = (0..4).map(|i| spec.transition[i][i]).fold(1.0, f64::min);
        assert!((min_diag - 0.9).abs() < 1e-12);
    }

    #[test]
    fn reversible_matrix_is_stationary() {
        let w = [0.55, 0.25, 0.15, 0.05];
        let p = reversible_transition(&w, &[[1, 2]], 0.9).unwrap();
        for j in 0..4 {
            let flow: f64 = (0..4).map(|i| w[i] * p[i][j]).sum();
            assert!((flow - w[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_transition_gives_constant_labels() {
        let mut cfg = GeneratorConfig {
            transition: Some(vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ]),
            ..Default::default()
        };
        cfg.frames = 50;
        let seqs = generate(&cfg.build().unwrap(), 10).unwrap();
        for s in &seqs {
            assert!(s.labels.iter().all(|&y| y == s.labels[0]));
            assert_eq!(s.views.len(), 2);
            assert!(s.views.iter().all(|v| v.rows == 50 && v.cols == 8));
        }
    }

    #[test]
    fn invalid_specs() {
        let bad_vis = GeneratorConfig {
            visibility: vec![vec![false, false], vec![true, true], vec![true, true], vec![true, true]],
            ..Default::default()
        };
        assert!(matches!(bad_vis.build(), Err(SynthError::InvalidSpec(_))));
        let bad_row = GeneratorConfig {
            transition: Some(vec![vec![0.5; 4]; 4]),
            ..Default::default()
        };
        assert!(bad_row.build().is_err());
        let spec = GeneratorConfig::default().build().unwrap();
        assert!(generate(&spec, 0).is_err());
    }

    #[test]
    fn forbidden_transitions_never_occur() {
        let spec = GeneratorConfig::default().build().unwrap();
        for s in generate(&spec, 20).unwrap() {
            for w in s.labels.windows(2) {
                assert!(spec.transition[w[0]][w[1]] > 0.0);
            }
        }
    }
}
