//! Detects spatio-temporal interest points in a volume with two flashing
//! blobs and prints their cuboid descriptor sizes.

use std::f64::consts::PI;

use mvladdm::features::{interest_descriptors, interest_response, CuboidSize, DetectorParams, Volume};

fn main() {
    let params = DetectorParams::default();
    let blobs = [(10.0, 12.0, 12.0), (26.0, 20.0, 26.0)];
    let v = Volume::from_fn(32, 36, 40, |x, y, t| {
        blobs
            .iter()
            .map(|&(x0, y0, t0)| {
                let r2 = (x as f64 - x0).powi(2) + (y as f64 - y0).powi(2);
                let dt = t as f64 - t0;
                (-r2 / 8.0).exp() * (2.0 * PI * params.omega_temporal * dt).cos() * (-dt * dt / 32.0).exp()
            })
            .sum()
    });
    let peak = interest_response(&v, &params).unwrap().data.iter().cloned().fold(0.0, f64::max);
    let params = DetectorParams { threshold: 0.1 * peak, ..params };
    let cuboid = CuboidSize { hx: 2, hy: 2, ht: 1 };
    let descs = interest_descriptors(&v, &params, cuboid).unwrap();
    println!("{} points above 10% of the peak response {peak:.4}", descs.len());
    for (t, d) in &descs {
        println!("frame {t}: descriptor length {} (cuboid {} + context 4)", d.len(), cuboid.descriptor_len());
    }
}
