//! Dense point sampling, median-filtered flow tracking, and
//! trajectory-aligned pooling over descriptor maps.

use super::{DescriptorMaps, FeatureError, FlowField, Frame};

/// Per-frame displacement above which tracking is considered failed.
pub const DEFAULT_MAX_DISPLACEMENT: f64 = 8.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// `(x, y)` per tracked frame; `points[0]` is the start.
    pub points: Vec<(f64, f64)>,
    /// Frame index of `points[0]`.
    pub start_frame: usize,
    /// Sampling-scale index, passed through untouched.
    pub scale: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn end_frame(&self) -> usize {
        self.start_frame + self.points.len().saturating_sub(1)
    }
}

fn sobel(frame: &Frame, x: isize, y: isize) -> (f64, f64) {
    let p = |dx: isize, dy: isize| frame.clamped(x + dx, y + dy);
    let gx = (p(1, -1) - p(-1, -1)) + 2.0 * (p(1, 0) - p(-1, 0)) + (p(1, 1) - p(-1, 1));
    let gy = (p(-1, 1) - p(-1, -1)) + 2.0 * (p(0, 1) - p(0, -1)) + (p(1, 1) - p(1, -1));
    (gx, gy)
}

/// Structure tensor `(sxx, sxy, syy)` from Sobel gradients summed over the
/// 3x3 neighbourhood of `(x, y)`.
pub fn structure_tensor(frame: &Frame, x: usize, y: usize) -> (f64, f64, f64) {
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for dy in -1isize..=1 {
        for dx in -1isize..=1 {
            let cx = (x as isize + dx).clamp(0, frame.width as isize - 1);
            let cy = (y as isize + dy).clamp(0, frame.height as isize - 1);
            let (gx, gy) = sobel(frame, cx, cy);
            sxx += gx * gx;
            sxy += gx * gy;
            syy += gy * gy;
        }
    }
    (sxx, sxy, syy)
}

pub fn min_eigenvalue(sxx: f64, sxy: f64, syy: f64) -> f64 {
    let half_trace = 0.5 * (sxx + syy);
    let half_diff = 0.5 * (sxx - syy);
    half_trace - (half_diff * half_diff + sxy * sxy).sqrt()
}

/// Grid points every `step` pixels (offset `step / 2`) whose structure
/// tensor's smaller eigenvalue exceeds `eig_threshold`.
pub fn dense_sample(
    frame: &Frame,
    step: usize,
    eig_threshold: f64,
) -> Result<Vec<(usize, usize)>, FeatureError> {
    if step == 0 {
        return Err(FeatureError::InvalidParameter("step must be >= 1".into()));
    }
    let mut points = Vec::new();
    for y in (step / 2..frame.height).step_by(step) {
        for x in (step / 2..frame.width).step_by(step) {
            let (sxx, sxy, syy) = structure_tensor(frame, x, y);
            if min_eigenvalue(sxx, sxy, syy) > eig_threshold {
                points.push((x, y));
            }
        }
    }
    Ok(points)
}

fn median9(mut v: [f64; 9]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[4]
}

/// 3x3 median of both flow components around `(x, y)`, replicate borders.
pub fn median_flow(flow: &FlowField, x: usize, y: usize) -> (f64, f64) {
    let mut dx = [0.0; 9];
    let mut dy = [0.0; 9];
    let mut i = 0;
    for oy in -1isize..=1 {
        for ox in -1isize..=1 {
            let cx = (x as isize + ox).clamp(0, flow.width as isize - 1) as usize;
            let cy = (y as isize + oy).clamp(0, flow.height as isize - 1) as usize;
            dx[i] = flow.dx[cy * flow.width + cx];
            dy[i] = flow.dy[cy * flow.width + cx];
            i += 1;
        }
    }
    (median9(dx), median9(dy))
}

pub fn track_trajectory(
    start: (f64, f64),
    flows: &[FlowField],
    length: usize,
) -> Result<Trajectory, FeatureError> {
    track_trajectory_with(start, flows, length, DEFAULT_MAX_DISPLACEMENT)
}

/// Follows `start` through `length` flow fields. Tracking stops early when
/// the next position leaves the frame or a step exceeds `max_displacement`.
pub fn track_trajectory_with(
    start: (f64, f64),
    flows: &[FlowField],
    length: usize,
    max_displacement: f64,
) -> Result<Trajectory, FeatureError> {
    if length == 0 {
        return Err(FeatureError::InvalidParameter("trajectory length must be >= 1".into()));
    }
    if flows.len() < length {
        return Err(FeatureError::InvalidParameter(format!(
            "{} flow fields cannot cover {length} steps",
            flows.len()
        )));
    }
    let (w, h) = (flows[0].width as f64, flows[0].height as f64);
    let inside = |(x, y): (f64, f64)| x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0;
    if !inside(start) {
        return Err(FeatureError::OutOfBoundsStart {
            x: start.0,
            y: start.1,
        });
    }
    let mut points = Vec::with_capacity(length + 1);
    points.push(start);
    let mut pos = start;
    for flow in &flows[..length] {
        let (rx, ry) = (pos.0.round() as usize, pos.1.round() as usize);
        let (dx, dy) = median_flow(flow, rx, ry);
        let next = (pos.0 + dx, pos.1 + dy);
        if (dx * dx + dy * dy).sqrt() > max_displacement || !inside(next) {
            break;
        }
        points.push(next);
        pos = next;
    }
    Ok(Trajectory {
        points,
        start_frame: 0,
        scale: 0,
    })
}

fn bilinear(maps: &DescriptorMaps, x: f64, y: f64, c: usize, t: usize) -> f64 {
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(maps.width - 1);
    let y1 = (y0 + 1).min(maps.height - 1);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let top = (1.0 - fx) * maps.get(x0, y0, c, t) + fx * maps.get(x1, y0, c, t);
    let bottom = (1.0 - fx) * maps.get(x0, y1, c, t) + fx * maps.get(x1, y1, c, t);
    (1.0 - fy) * top + fy * bottom
}

/// Mean over trajectory points of the bilinearly sampled map values.
/// Point `i` reads frame `start_frame + i` at `(x, y) * map_scale`.
pub fn trajectory_pool(
    traj: &Trajectory,
    maps: &DescriptorMaps,
    map_scale: f64,
) -> Result<Vec<f64>, FeatureError> {
    if traj.is_empty() {
        return Err(FeatureError::InvalidParameter("empty trajectory".into()));
    }
    let mut acc = vec![0.0; maps.channels];
    for (i, &(x, y)) in traj.points.iter().enumerate() {
        let t = traj.start_frame + i;
        let (mx, my) = (x * map_scale, y * map_scale);
        let ok = mx >= 0.0
            && my >= 0.0
            && mx <= (maps.width - 1) as f64
            && my <= (maps.height - 1) as f64
            && t < maps.frames;
        if !ok {
            return Err(FeatureError::ScaleMismatch {
                x: mx,
                y: my,
                t,
                dims: (maps.height, maps.width, maps.frames),
            });
        }
        for (c, a) in acc.iter_mut().enumerate() {
            *a += bilinear(maps, mx, my, c, t);
        }
    }
    let n = traj.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_frame_has_no_samples() {
        let f = Frame::from_fn(20, 20, |_, _| 0.3);
        assert!(dense_sample(&f, 5, 0.0).unwrap().is_empty());
    }

    #[test]
    fn step_equal_to_frame_size() {
        let f = Frame::from_fn(12, 12, |x, y| ((x * 7 + y * 13) % 5) as f64);
        assert!(dense_sample(&f, 12, -1.0).unwrap().len() <= 1);
        assert!(dense_sample(&f, 0, 0.0).is_err());
    }

    #[test]
    fn constant_flow_track() {
        let flows = vec![FlowField::constant(5, 10, 2.0, 0.0); 3];
        let tr = track_trajectory((0.0, 0.0), &flows, 3).unwrap();
        assert_eq!(tr.points, vec![(0.0, 0.0), (2.0, 0.0), (4.0, 0.0), (6.0, 0.0)]);
    }

    #[test]
    fn zero_flow_is_stationary() {
        let flows = vec![FlowField::constant(5, 5, 0.0, 0.0); 4];
        let tr = track_trajectory((2.0, 3.0), &flows, 4).unwrap();
        assert_eq!(tr.points, vec![(2.0, 3.0); 5]);
    }

    #[test]
    fn salt_noise_is_filtered() {
        let mut noisy = FlowField::constant(9, 9, 1.0, 0.0);
        noisy.dx[4 * 9 + 4] = 50.0;
        noisy.dy[4 * 9 + 4] = -50.0;
        let clean = FlowField::constant(9, 9, 1.0, 0.0);
        let tr = track_trajectory((4.0, 4.0), &[noisy, clean], 2).unwrap();
        assert_eq!(tr.points, vec![(4.0, 4.0), (5.0, 4.0), (6.0, 4.0)]);
    }

    #[test]
    fn truncation_at_edge_and_large_motion() {
        let flows = vec![FlowField::constant(5, 5, 2.0, 0.0); 4];
        let tr = track_trajectory((0.0, 0.0), &flows, 4).unwrap();
        assert_eq!(tr.len(), 3);
        let fast = vec![FlowField::constant(50, 50, 9.0, 0.0); 2];
        assert_eq!(track_trajectory((0.0, 0.0), &fast, 2).unwrap().len(), 1);
        assert!(matches!(
            track_trajectory((-1.0, 0.0), &flows, 1),
            Err(FeatureError::OutOfBoundsStart { .. })
        ));
    }

    #[test]
    fn pooling_constant_and_point() {
        let maps = DescriptorMaps::from_fn(6, 6, 3, 4, |_, _, c, _| c as f64 + 0.5);
        let tr = Trajectory {
            points: vec![(1.2, 3.7), (2.5, 2.5), (4.9, 0.1)],
            start_frame: 1,
            scale: 0,
        };
        assert_eq!(trajectory_pool(&tr, &maps, 1.0).unwrap(), vec![0.5, 1.5, 2.5]);

        let maps = DescriptorMaps::from_fn(6, 6, 2, 2, |x, y, c, t| (x + 10 * y + 100 * c + 1000 * t) as f64);
        let single = Trajectory {
            points: vec![(3.0, 4.0)],
            start_frame: 1,
            scale: 0,
        };
        assert_eq!(trajectory_pool(&single, &maps, 1.0).unwrap(), vec![1043.0, 1143.0]);
        assert!(matches!(
            trajectory_pool(&single, &maps, 2.0),
            Err(FeatureError::ScaleMismatch { .. })
        ));
    }
}
