use std::fs;
use std::io::Write;
use std::path::Path;

use super::{CliError, ClipConfig, EncodeConfig, RunArgs, RunConfig};
use crate::features::{
    assemble_window_features, interest_descriptors, trajectory_descriptors, CuboidSize,
    DescriptorMaps, DetectorParams, FeatureError, FlowField, PointStream, RawArray, StreamEncoder,
    TaggedDescriptor, TrajectoryParams, ViewStreams, Volume,
};
use crate::synth::{save_dataset, MultiViewSequence};

fn binary(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Binary(format!("{}: {e}", path.display()))
}

fn load_raw(path: &Path) -> Result<RawArray, CliError> {
    RawArray::load(path).map_err(|e| binary(path, e))
}

fn feature_err(e: FeatureError) -> CliError {
    match e {
        FeatureError::Format(_) | FeatureError::Io(_) => CliError::Binary(e.to_string()),
        FeatureError::InvalidParameter(_) => CliError::Config(e.to_string()),
        other => CliError::Other(other.to_string()),
    }
}

struct ClipData {
    id: String,
    labels: Vec<usize>,
    /// `[view][stream]`
    streams: Vec<Vec<Vec<TaggedDescriptor>>>,
    frames: usize,
}

fn read_labels(path: Option<&Path>, frames: usize) -> Result<Vec<usize>, CliError> {
    let Some(path) = path else {
        return Ok(vec![0; frames]);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let labels: Vec<usize> = text
        .split_whitespace()
        .map(|w| w.parse())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if labels.len() != frames {
        return Err(CliError::Config(format!(
            "{}: {} labels for {frames} frames",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels)
}

fn extract_clip(clip: &ClipConfig, enc: &EncodeConfig) -> Result<ClipData, CliError> {
    let detector = DetectorParams {
        sigma_spatial: enc.sigma_spatial,
        omega_temporal: enc.omega_temporal,
        threshold: enc.threshold,
    };
    let [hx, hy, ht] = enc.cuboid;
    let traj = TrajectoryParams {
        step: enc.trajectory_step,
        eig_threshold: enc.eig_threshold,
        length: enc.trajectory_length,
        stride: enc.trajectory_stride,
        map_scale: enc.map_scale,
        ..TrajectoryParams::default()
    };
    let mut frames = None;
    let mut streams = Vec::with_capacity(clip.views.len());
    for view in &clip.views {
        let raw = load_raw(&view.volume)?;
        let volume = Volume::from_raw(&raw).map_err(|e| binary(&view.volume, e))?;
        if *frames.get_or_insert(volume.frames) != volume.frames {
            return Err(CliError::Config(format!(
                "clip {}: views disagree on frame count",
                clip.id
            )));
        }
        let mut per_view = vec![interest_descriptors(&volume, &detector, CuboidSize { hx, hy, ht })
            .map_err(feature_err)?];
        match (&view.flow, &view.maps) {
            (Some(flow), Some(maps)) => {
                let flows = FlowField::sequence_from_raw(&load_raw(flow)?).map_err(|e| binary(flow, e))?;
                let maps_raw = load_raw(maps)?;
                let maps = DescriptorMaps::from_raw(&maps_raw);
                per_view.push(trajectory_descriptors(&volume, &flows, &maps, &traj).map_err(feature_err)?);
            }
            (None, None) => {}
            _ => {
                return Err(CliError::Config(format!(
                    "clip {}: flow and maps must be given together",
                    clip.id
                )))
            }
        }
        streams.push(per_view);
    }
    let frames = frames.ok_or_else(|| CliError::Config(format!("clip {} has no views", clip.id)))?;
    Ok(ClipData {
        id: clip.id.clone(),
        labels: read_labels(clip.labels.as_deref(), frames)?,
        streams,
        frames,
    })
}

/// Fits one encoder per (view, stream) on descriptors pooled over all clips,
/// then Fisher-encodes sliding windows of every clip.
pub fn encode_clips(enc: &EncodeConfig) -> Result<Vec<MultiViewSequence>, CliError> {
    let clips: Vec<ClipData> = enc
        .clips
        .iter()
        .map(|c| extract_clip(c, enc))
        .collect::<Result<_, _>>()?;
    let Some(first) = clips.first() else {
        return Ok(Vec::new());
    };
    let shape: Vec<usize> = first.streams.iter().map(Vec::len).collect();
    if let Some(c) = clips.iter().find(|c| c.streams.iter().map(Vec::len).collect::<Vec<_>>() != shape) {
        return Err(CliError::Config(format!(
            "clip {} has a different view/stream layout from clip {}",
            c.id, first.id
        )));
    }
    let [hx, hy, ht] = enc.cuboid;
    let interest_dim = CuboidSize { hx, hy, ht }.descriptor_len() + 4;
    let mut encoders = Vec::with_capacity(shape.len());
    for (v, &n_streams) in shape.iter().enumerate() {
        let mut per_view = Vec::with_capacity(n_streams);
        for s in 0..n_streams {
            let pooled: Vec<Vec<f64>> = clips
                .iter()
                .flat_map(|c| c.streams[v][s].iter().map(|(_, d)| d.clone()))
                .collect();
            let dim = pooled.first().map_or(if s == 0 { interest_dim } else { 1 }, Vec::len);
            let seed = enc.seed.wrapping_add((v * 16 + s) as u64);
            per_view.push(
                StreamEncoder::fit(&pooled, dim, enc.pca_dim, enc.components, enc.gmm_iters, seed)
                    .map_err(feature_err)?,
            );
        }
        encoders.push(per_view);
    }
    clips
        .iter()
        .map(|c| {
            let views: Vec<ViewStreams> = c
                .streams
                .iter()
                .zip(&encoders)
                .map(|(streams, encs)| ViewStreams {
                    frames: c.frames,
                    streams: streams
                        .iter()
                        .zip(encs)
                        .map(|(points, e)| PointStream {
                            points: points.iter().map(|(t, d)| (*t, e.project(d))).collect(),
                            gmm: e.gmm.clone(),
                        })
                        .collect(),
                })
                .collect();
            assemble_window_features(&c.id, &views, &c.labels, enc.window).map_err(feature_err)
        })
        .collect()
}

pub fn cmd_encode<W: Write>(cfg: &RunConfig, args: &RunArgs, out: &mut W) -> Result<(), CliError> {
    let seqs = encode_clips(&cfg.encode)?;
    let path = args.out.join(&cfg.encode.output);
    save_dataset(&seqs, &path).map_err(|e| CliError::Other(e.to_string()))?;
    writeln!(out, "{}", path.display())?;
    Ok(())
}
