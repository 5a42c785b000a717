//! Spatio-temporal interest points.
//!
//! The response volume is the quadrature energy `even^2 + odd^2` of a
//! Laplacian-of-Gaussian in space followed by a pair of 1-D Gabor filters in
//! time. All filtering uses replicate borders, which keeps the separable
//! passes identical to a dense 3-D correlation.

use std::f64::consts::PI;

use super::{FeatureError, Volume};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterestPoint {
    pub x: usize,
    pub y: usize,
    pub t: usize,
    pub response: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorParams {
    pub sigma_spatial: f64,
    /// Gabor frequency, cycles per frame.
    pub omega_temporal: f64,
    pub threshold: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            sigma_spatial: 1.5,
            omega_temporal: 0.25,
            threshold: 1e-4,
        }
    }
}

/// Sampled spatial kernels: Gaussian `g` and its second derivative `g2`,
/// indexed `-radius..=radius`.
#[derive(Clone, Debug)]
pub struct SpatialKernels {
    pub radius: usize,
    pub g: Vec<f64>,
    pub g2: Vec<f64>,
}

pub fn spatial_kernels(sigma: f64) -> SpatialKernels {
    let radius = (3.0 * sigma).ceil() as usize;
    let s2 = sigma * sigma;
    let norm = 1.0 / ((2.0 * PI).sqrt() * sigma);
    let mut g = Vec::with_capacity(2 * radius + 1);
    let mut g2 = Vec::with_capacity(2 * radius + 1);
    for i in -(radius as isize)..=radius as isize {
        let x = i as f64;
        let gv = norm * (-x * x / (2.0 * s2)).exp();
        g.push(gv);
        g2.push((x * x / (s2 * s2) - 1.0 / s2) * gv);
    }
    SpatialKernels { radius, g, g2 }
}

/// Temporal Gabor quadrature pair, indexed `-radius..=radius`. The Gaussian
/// envelope has standard deviation `1 / (2 * omega)` frames.
#[derive(Clone, Debug)]
pub struct TemporalKernels {
    pub radius: usize,
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

pub fn gabor_pair(omega: f64) -> TemporalKernels {
    let tau = 1.0 / (2.0 * omega);
    let radius = (3.0 * tau).ceil() as usize;
    let mut even = Vec::with_capacity(2 * radius + 1);
    let mut odd = Vec::with_capacity(2 * radius + 1);
    for i in -(radius as isize)..=radius as isize {
        let t = i as f64;
        let env = (-t * t / (2.0 * tau * tau)).exp();
        even.push(-(2.0 * PI * omega * t).cos() * env);
        odd.push(-(2.0 * PI * omega * t).sin() * env);
    }
    TemporalKernels { radius, even, odd }
}

fn validate(v: &Volume, params: &DetectorParams) -> Result<(SpatialKernels, TemporalKernels), FeatureError> {
    if !(params.sigma_spatial > 0.0) {
        return Err(FeatureError::InvalidParameter(format!(
            "sigma_spatial must be positive, got {}",
            params.sigma_spatial
        )));
    }
    if !(params.omega_temporal > 0.0 && params.omega_temporal < 0.5) {
        return Err(FeatureError::InvalidParameter(format!(
            "omega_temporal must lie in (0, 0.5), got {}",
            params.omega_temporal
        )));
    }
    if !(params.threshold >= 0.0) {
        return Err(FeatureError::InvalidParameter(format!(
            "threshold must be nonnegative, got {}",
            params.threshold
        )));
    }
    let sk = spatial_kernels(params.sigma_spatial);
    let tk = gabor_pair(params.omega_temporal);
    let ss = 2 * sk.radius + 1;
    let ts = 2 * tk.radius + 1;
    if v.width < ss || v.height < ss || v.frames < ts {
        return Err(FeatureError::VolumeTooSmall {
            dims: (v.height, v.width, v.frames),
            support: (ss, ss, ts),
        });
    }
    Ok((sk, tk))
}

#[derive(Clone, Copy)]
enum Dir {
    X,
    Y,
    T,
}

/// Correlates along one axis with replicate borders.
fn correlate_axis(v: &Volume, kernel: &[f64], dir: Dir) -> Volume {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; v.data.len()];
    for t in 0..v.frames {
        for y in 0..v.height {
            for x in 0..v.width {
                let mut acc = 0.0;
                for (k, &w) in kernel.iter().enumerate() {
                    let o = k as isize - r;
                    let val = match dir {
                        Dir::X => v.clamped(x as isize + o, y as isize, t as isize),
                        Dir::Y => v.clamped(x as isize, y as isize + o, t as isize),
                        Dir::T => v.clamped(x as isize, y as isize, t as isize + o),
                    };
                    acc += w * val;
                }
                out[v.index(x, y, t)] = acc;
            }
        }
    }
    Volume::new(v.height, v.width, v.frames, out)
}

/// Quadrature energy response, same dims as the input.
pub fn interest_response(v: &Volume, params: &DetectorParams) -> Result<Volume, FeatureError> {
    let (sk, tk) = validate(v, params)?;
    // LoG(x, y) = g''(x) g(y) + g(x) g''(y)
    let a = correlate_axis(&correlate_axis(v, &sk.g2, Dir::X), &sk.g, Dir::Y);
    let b = correlate_axis(&correlate_axis(v, &sk.g, Dir::X), &sk.g2, Dir::Y);
    let log = Volume::new(
        v.height,
        v.width,
        v.frames,
        a.data.iter().zip(&b.data).map(|(p, q)| p + q).collect(),
    );
    let even = correlate_axis(&log, &tk.even, Dir::T);
    let odd = correlate_axis(&log, &tk.odd, Dir::T);
    Ok(Volume::new(
        v.height,
        v.width,
        v.frames,
        even.data
            .iter()
            .zip(&odd.data)
            .map(|(e, o)| e * e + o * o)
            .collect(),
    ))
}

/// Strict 3x3x3 local maxima of the response above `threshold`, strongest
/// first.
pub fn detect_interest_points(
    v: &Volume,
    params: &DetectorParams,
) -> Result<Vec<InterestPoint>, FeatureError> {
    let resp = interest_response(v, params)?;
    let mut points = Vec::new();
    for t in 0..v.frames {
        for y in 0..v.height {
            for x in 0..v.width {
                let c = resp.get(x, y, t);
                if c > params.threshold && is_strict_max(&resp, x, y, t, c) {
                    points.push(InterestPoint {
                        x,
                        y,
                        t,
                        response: c,
                    });
                }
            }
        }
    }
    points.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then((a.t, a.y, a.x).cmp(&(b.t, b.y, b.x)))
    });
    Ok(points)
}

fn is_strict_max(resp: &Volume, x: usize, y: usize, t: usize, c: f64) -> bool {
    for dt in -1isize..=1 {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dx == 0 && dy == 0 && dt == 0 {
                    continue;
                }
                let (nx, ny, nt) = (x as isize + dx, y as isize + dy, t as isize + dt);
                if nx < 0
                    || ny < 0
                    || nt < 0
                    || nx >= resp.width as isize
                    || ny >= resp.height as isize
                    || nt >= resp.frames as isize
                {
                    continue;
                }
                if resp.get(nx as usize, ny as usize, nt as usize) >= c {
                    return false;
                }
            }
        }
    }
    true
}
