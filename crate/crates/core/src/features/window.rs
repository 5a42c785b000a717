use super::{fisher_encode, FeatureError, GmmModel};
use crate::synth::{FeatureMatrix, MultiViewSequence};

/// Descriptors of one feature type, each tagged with its frame index, and the
/// GMM used to encode them.
#[derive(Clone, Debug)]
pub struct PointStream {
    pub points: Vec<(usize, Vec<f64>)>,
    pub gmm: GmmModel,
}

impl PointStream {
    pub fn encoded_len(&self) -> usize {
        2 * self.gmm.components() * self.gmm.dim()
    }
}

/// All feature streams of one camera view.
#[derive(Clone, Debug)]
pub struct ViewStreams {
    pub frames: usize,
    pub streams: Vec<PointStream>,
}

impl ViewStreams {
    pub fn encoded_len(&self) -> usize {
        self.streams.iter().map(PointStream::encoded_len).sum()
    }
}

/// Frame range `[lo, hi]` of the window of length `window_len` centred on
/// `t`, clipped to `0..frames`.
pub fn window_bounds(t: usize, window_len: usize, frames: usize) -> (usize, usize) {
    let before = (window_len - 1) / 2;
    let after = window_len / 2;
    (t.saturating_sub(before), (t + after).min(frames - 1))
}

/// One row per frame and view: the concatenated Fisher vectors of every
/// stream over the window centred on that frame.
pub fn assemble_window_features(
    id: &str,
    views: &[ViewStreams],
    labels: &[usize],
    window_len: usize,
) -> Result<MultiViewSequence, FeatureError> {
    if window_len == 0 {
        return Err(FeatureError::InvalidParameter("window_len must be >= 1".into()));
    }
    let frames = labels.len();
    if let Some(v) = views.iter().find(|v| v.frames != frames) {
        return Err(FeatureError::ViewLengthMismatch {
            expected: frames,
            got: v.frames,
        });
    }
    let mut matrices = Vec::with_capacity(views.len());
    for view in views {
        let cols = view.encoded_len();
        let mut data = Vec::with_capacity(frames * cols);
        let sorted: Vec<Vec<&(usize, Vec<f64>)>> = view
            .streams
            .iter()
            .map(|s| {
                let mut pts: Vec<_> = s.points.iter().collect();
                pts.sort_by_key(|p| p.0);
                pts
            })
            .collect();
        for t in 0..frames {
            let (lo, hi) = window_bounds(t, window_len, frames);
            for (stream, pts) in view.streams.iter().zip(&sorted) {
                let start = pts.partition_point(|p| p.0 < lo);
                let end = pts.partition_point(|p| p.0 <= hi);
                let window: Vec<Vec<f64>> = pts[start..end].iter().map(|p| p.1.clone()).collect();
                data.extend(fisher_encode(&window, &stream.gmm)?.values);
            }
        }
        matrices.push(FeatureMatrix::new(frames, cols, data));
    }
    Ok(MultiViewSequence {
        id: id.to_string(),
        labels: labels.to_vec(),
        views: matrices,
    })
}
