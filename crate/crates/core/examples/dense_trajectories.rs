//! Samples textured points, tracks them through a rotating flow field and
//! pools an external descriptor map along each trajectory.

use mvladdm::features::{
    dense_sample, track_trajectory, trajectory_pool, DescriptorMaps, FlowField, Frame, Trajectory,
};

fn main() {
    let (w, h, frames) = (48, 48, 12);
    let texture = Frame::from_fn(h, w, |x, y| ((x * 7919 + y * 104_729) % 97) as f64 / 97.0);
    let starts = dense_sample(&texture, 5, 1e-3).unwrap();

    // slow rotation about the centre
    let mut flow = FlowField::constant(h, w, 0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            flow.dx[y * w + x] = -0.05 * (y as f64 - 24.0);
            flow.dy[y * w + x] = 0.05 * (x as f64 - 24.0);
        }
    }
    let flows = vec![flow; frames - 1];
    let maps = DescriptorMaps::from_fn(h, w, 2, frames, |x, y, c, t| if c == 0 { x as f64 } else { (y + t) as f64 });

    let trajectories: Vec<Trajectory> = starts
        .iter()
        .map(|&(x, y)| track_trajectory((x as f64, y as f64), &flows, frames - 1).unwrap())
        .collect();
    let full = trajectories.iter().filter(|t| t.len() == frames).count();
    println!("{} sampled points, {full} tracked through all {frames} frames", starts.len());
    if let Some(t) = trajectories.iter().find(|t| t.len() == frames) {
        println!("first full trajectory ends at {:?}", t.points.last().unwrap());
        println!("pooled descriptor {:?}", trajectory_pool(t, &maps, 1.0).unwrap());
    }
}
