//! Per-clip descriptor extraction and the per-stream PCA + GMM encoders.

use super::{
    contextual_feature, cuboid_gradients, dense_sample, detect_interest_points, gmm_fit,
    pca_fit_transform, track_trajectory_with, trajectory_pool, CuboidSize, DescriptorMaps,
    DetectorParams, FeatureError, FlowField, GmmModel, PcaResult, Volume,
};

/// Descriptor tagged with the frame it describes.
pub type TaggedDescriptor = (usize, Vec<f64>);

/// Cuboid gradients followed by the contextual feature of every interest
/// point. The context centre is the mean position of the points detected in
/// the same frame.
pub fn interest_descriptors(
    volume: &Volume,
    detector: &DetectorParams,
    cuboid: CuboidSize,
) -> Result<Vec<TaggedDescriptor>, FeatureError> {
    let points = detect_interest_points(volume, detector)?;
    let mut centres = vec![(0.0, 0.0, 0usize); volume.frames];
    for p in &points {
        let c = &mut centres[p.t];
        c.0 += p.x as f64;
        c.1 += p.y as f64;
        c.2 += 1;
    }
    Ok(points
        .iter()
        .map(|p| {
            let (sx, sy, n) = centres[p.t];
            let centre = (sx / n as f64, sy / n as f64);
            let mut desc = cuboid_gradients(volume, p, cuboid);
            // a lone point at the origin has no direction; its context is zero
            let ctx = contextual_feature(centre, (p.x as f64, p.y as f64)).unwrap_or([0.0; 4]);
            desc.extend(ctx);
            (p.t, desc)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryParams {
    /// Grid step for dense sampling, pixels.
    pub step: usize,
    pub eig_threshold: f64,
    /// Tracked steps; trajectories hold up to `length + 1` points.
    pub length: usize,
    /// Frames between successive sampling frames.
    pub stride: usize,
    /// Factor from frame to descriptor-map coordinates.
    pub map_scale: f64,
    pub max_displacement: f64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            step: 5,
            eig_threshold: 1e-3,
            length: 15,
            stride: 15,
            map_scale: 1.0,
            max_displacement: super::DEFAULT_MAX_DISPLACEMENT,
        }
    }
}

/// Trajectory-pooled map descriptors, tagged with each trajectory's middle
/// frame.
pub fn trajectory_descriptors(
    volume: &Volume,
    flows: &[FlowField],
    maps: &DescriptorMaps,
    params: &TrajectoryParams,
) -> Result<Vec<TaggedDescriptor>, FeatureError> {
    if params.stride == 0 || params.length == 0 {
        return Err(FeatureError::InvalidParameter(
            "trajectory stride and length must be >= 1".into(),
        ));
    }
    let mut out = Vec::new();
    let mut t = 0;
    while t + params.length <= flows.len() && t < volume.frames {
        for (x, y) in dense_sample(&volume.frame(t), params.step, params.eig_threshold)? {
            let mut traj = track_trajectory_with(
                (x as f64, y as f64),
                &flows[t..],
                params.length,
                params.max_displacement,
            )?;
            traj.start_frame = t;
            let tag = (t + traj.len() / 2).min(volume.frames - 1);
            out.push((tag, trajectory_pool(&traj, maps, params.map_scale)?));
        }
        t += params.stride;
    }
    Ok(out)
}

/// Optional PCA followed by the GMM used for Fisher encoding.
#[derive(Clone, Debug)]
pub struct StreamEncoder {
    pub pca: Option<PcaResult>,
    pub gmm: GmmModel,
}

impl StreamEncoder {
    /// Fits on pooled descriptors of dimension `dim`. PCA applies when
    /// `pca_dim < dim`; the component count shrinks to the number of points.
    /// Without any points the GMM is a standard-normal placeholder (every
    /// window then encodes to zeros).
    pub fn fit(
        descriptors: &[Vec<f64>],
        dim: usize,
        pca_dim: usize,
        components: usize,
        max_iters: usize,
        seed: u64,
    ) -> Result<Self, FeatureError> {
        let reduced = pca_dim.min(dim).max(1);
        if descriptors.is_empty() {
            return Ok(Self {
                pca: None,
                gmm: GmmModel {
                    weights: vec![1.0],
                    means: vec![vec![0.0; reduced]],
                    stds: vec![vec![1.0; reduced]],
                },
            });
        }
        let (pca, xs) = if reduced < dim && descriptors.len() >= reduced {
            let p = pca_fit_transform(descriptors, reduced)?;
            let xs = p.projected.clone();
            (Some(p), xs)
        } else {
            (None, descriptors.to_vec())
        };
        let k = components.min(xs.len()).max(1);
        let gmm = gmm_fit(&xs, k, max_iters, seed)?.model;
        Ok(Self { pca, gmm })
    }

    pub fn project(&self, desc: &[f64]) -> Vec<f64> {
        match &self.pca {
            Some(p) => p.transform(desc),
            None => desc.to_vec(),
        }
    }
}
