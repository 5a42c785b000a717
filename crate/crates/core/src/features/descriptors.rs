use super::{FeatureError, InterestPoint, Volume};

/// Cuboid half-extents in pixels and frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CuboidSize {
    pub hx: usize,
    pub hy: usize,
    pub ht: usize,
}

impl CuboidSize {
    pub fn cells(&self) -> usize {
        (2 * self.hx + 1) * (2 * self.hy + 1) * (2 * self.ht + 1)
    }

    /// Descriptor length: three gradient channels per cell.
    pub fn descriptor_len(&self) -> usize {
        3 * self.cells()
    }
}

/// Central-difference brightness gradients over the cuboid around `p`.
///
/// Layout: all `G_x` values, then `G_y`, then `G_t`; each block is ordered
/// `t`, then `y`, then `x`. Samples outside the volume replicate the border.
pub fn cuboid_gradients(v: &Volume, p: &InterestPoint, size: CuboidSize) -> Vec<f64> {
    let n = size.cells();
    let mut out = vec![0.0; 3 * n];
    let (px, py, pt) = (p.x as isize, p.y as isize, p.t as isize);
    let mut i = 0;
    for dt in -(size.ht as isize)..=size.ht as isize {
        for dy in -(size.hy as isize)..=size.hy as isize {
            for dx in -(size.hx as isize)..=size.hx as isize {
                let (x, y, t) = (px + dx, py + dy, pt + dt);
                out[i] = 0.5 * (v.clamped(x + 1, y, t) - v.clamped(x - 1, y, t));
                out[n + i] = 0.5 * (v.clamped(x, y + 1, t) - v.clamped(x, y - 1, t));
                out[2 * n + i] = 0.5 * (v.clamped(x, y, t + 1) - v.clamped(x, y, t - 1));
                i += 1;
            }
        }
    }
    out
}

/// `[xq - xc, yq - yc, xq, yq]` scaled to unit length.
pub fn contextual_feature(center: (f64, f64), query: (f64, f64)) -> Result<[f64; 4], FeatureError> {
    let raw = [
        query.0 - center.0,
        query.1 - center.1,
        query.0,
        query.1,
    ];
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(FeatureError::DegenerateInput(
            "contextual feature of a zero vector".into(),
        ));
    }
    Ok(raw.map(|v| v / norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIZE: CuboidSize = CuboidSize { hx: 2, hy: 1, ht: 1 };

    fn pt(x: usize, y: usize, t: usize) -> InterestPoint {
        InterestPoint { x, y, t, response: 1.0 }
    }

    #[test]
    fn constant_volume_zero_descriptor() {
        let v = Volume::from_fn(8, 8, 8, |_, _, _| 5.0);
        let d = cuboid_gradients(&v, &pt(0, 7, 3), SIZE);
        assert_eq!(d.len(), SIZE.descriptor_len());
        assert!(d.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn linear_ramp_interior() {
        let a = 0.75;
        let v = Volume::from_fn(10, 10, 10, |x, _, _| a * x as f64);
        let d = cuboid_gradients(&v, &pt(5, 5, 5), SIZE);
        let n = SIZE.cells();
        assert!(d[..n].iter().all(|&g| (g - a).abs() < 1e-12));
        assert!(d[n..].iter().all(|&g| g == 0.0));
    }

    #[test]
    fn contextual_examples() {
        let f = contextual_feature((0.0, 0.0), (3.0, 4.0)).unwrap();
        let s = 50f64.sqrt();
        for (got, want) in f.iter().zip([3.0 / s, 4.0 / s, 3.0 / s, 4.0 / s]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(contextual_feature((2.0, 0.0), (2.0, 0.0)).unwrap(), [0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            contextual_feature((0.0, 0.0), (0.0, 0.0)),
            Err(FeatureError::DegenerateInput(_))
        ));
    }
}
