//! Dense inputs of the feature pipeline and their on-disk form.
//!
//! On disk every array is an ASCII header line `H W C T\n` followed by
//! `H*W*C*T` little-endian `f32` values in row-major order over the header
//! dimensions, i.e. the frame index varies fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::FeatureError;

/// Raw 4-D array as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RawArray {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub frames: usize,
    /// Row-major over `(height, width, channels, frames)`.
    pub data: Vec<f32>,
}

impl RawArray {
    pub fn index(&self, y: usize, x: usize, c: usize, t: usize) -> usize {
        ((y * self.width + x) * self.channels + c) * self.frames + t
    }

    pub fn get(&self, y: usize, x: usize, c: usize, t: usize) -> f32 {
        self.data[self.index(y, x, c, t)]
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Self, FeatureError> {
        let mut reader = BufReader::new(reader);
        let mut header = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            if reader.read(&mut byte)? == 0 {
                return Err(FeatureError::Format("missing header newline".into()));
            }
            if byte[0] == b'\n' {
                break;
            }
            header.push(byte[0]);
            if header.len() > 256 {
                return Err(FeatureError::Format("header line too long".into()));
            }
        }
        let header = String::from_utf8(header)
            .map_err(|_| FeatureError::Format("header is not ASCII".into()))?;
        let dims: Vec<usize> = header
            .split_ascii_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| FeatureError::Format(format!("bad header {header:?}: {e}")))?;
        let [height, width, channels, frames] = dims[..] else {
            return Err(FeatureError::Format(format!(
                "header must have 4 fields, got {header:?}"
            )));
        };
        if dims.contains(&0) {
            return Err(FeatureError::Format(format!("zero dimension in {header:?}")));
        }
        let count = height * width * channels * frames;
        let mut bytes = vec![0u8; count * 4];
        reader.read_exact(&mut bytes).map_err(|_| {
            FeatureError::Format(format!("expected {count} f32 values after header"))
        })?;
        if reader.read(&mut byte)? != 0 {
            return Err(FeatureError::Format("trailing bytes after data".into()));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self {
            height,
            width,
            channels,
            frames,
            data,
        })
    }

    pub fn write_to<W: Write>(&self, writer: W) -> Result<(), FeatureError> {
        let mut w = BufWriter::new(writer);
        writeln!(
            w,
            "{} {} {} {}",
            self.height, self.width, self.channels, self.frames
        )?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        Self::read_from(File::open(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        self.write_to(File::create(path)?)
    }
}

/// Single-channel frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub height: usize,
    pub width: usize,
    /// Row-major `[y][x]`.
    pub data: Vec<f64>,
}

impl Frame {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), height * width, "frame data length");
        Self {
            height,
            width,
            data,
        }
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(height, width, data)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Replicate-border access.
    pub fn clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.get(xc, yc)
    }
}

/// Grey-level video volume, `height x width x frames`.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    /// Frame-major `[t][y][x]`.
    pub data: Vec<f64>,
}

impl Volume {
    pub fn new(height: usize, width: usize, frames: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), height * width * frames, "volume data length");
        Self {
            height,
            width,
            frames,
            data,
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        frames: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * frames);
        for t in 0..frames {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, t));
                }
            }
        }
        Self::new(height, width, frames, data)
    }

    pub fn index(&self, x: usize, y: usize, t: usize) -> usize {
        (t * self.height + y) * self.width + x
    }

    pub fn get(&self, x: usize, y: usize, t: usize) -> f64 {
        self.data[self.index(x, y, t)]
    }

    /// Replicate-border access.
    pub fn clamped(&self, x: isize, y: isize, t: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        let tc = t.clamp(0, self.frames as isize - 1) as usize;
        self.get(xc, yc, tc)
    }

    pub fn frame(&self, t: usize) -> Frame {
        let n = self.height * self.width;
        Frame::new(self.height, self.width, self.data[t * n..(t + 1) * n].to_vec())
    }

    pub fn from_raw(raw: &RawArray) -> Result<Self, FeatureError> {
        if raw.channels != 1 {
            return Err(FeatureError::Format(format!(
                "volume must have 1 channel, got {}",
                raw.channels
            )));
        }
        Ok(Self::from_fn(raw.height, raw.width, raw.frames, |x, y, t| {
            raw.get(y, x, 0, t) as f64
        }))
    }

    pub fn to_raw(&self) -> RawArray {
        let mut data = vec![0f32; self.data.len()];
        let raw_index = |x: usize, y: usize, t: usize| (y * self.width + x) * self.frames + t;
        for t in 0..self.frames {
            for y in 0..self.height {
                for x in 0..self.width {
                    data[raw_index(x, y, t)] = self.get(x, y, t) as f32;
                }
            }
        }
        RawArray {
            height: self.height,
            width: self.width,
            channels: 1,
            frames: self.frames,
            data,
        }
    }
}

/// Dense displacement field between frame `t` and `t + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    pub height: usize,
    pub width: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl FlowField {
    pub fn constant(height: usize, width: usize, dx: f64, dy: f64) -> Self {
        Self {
            height,
            width,
            dx: vec![dx; height * width],
            dy: vec![dy; height * width],
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            dx: self.dx.iter().map(|v| -v).collect(),
            dy: self.dy.iter().map(|v| -v).collect(),
        }
    }

    /// Splits a 2-channel raw array into one field per frame.
    pub fn sequence_from_raw(raw: &RawArray) -> Result<Vec<Self>, FeatureError> {
        if raw.channels != 2 {
            return Err(FeatureError::Format(format!(
                "flow must have 2 channels, got {}",
                raw.channels
            )));
        }
        Ok((0..raw.frames)
            .map(|t| {
                let mut dx = Vec::with_capacity(raw.height * raw.width);
                let mut dy = Vec::with_capacity(raw.height * raw.width);
                for y in 0..raw.height {
                    for x in 0..raw.width {
                        dx.push(raw.get(y, x, 0, t) as f64);
                        dy.push(raw.get(y, x, 1, t) as f64);
                    }
                }
                Self {
                    height: raw.height,
                    width: raw.width,
                    dx,
                    dy,
                }
            })
            .collect())
    }
}

/// Externally computed per-frame feature maps with `channels` channels.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorMaps {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub frames: usize,
    /// `[t][y][x][c]`.
    pub data: Vec<f64>,
}

impl DescriptorMaps {
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        frames: usize,
        f: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels * frames);
        for t in 0..frames {
            for y in 0..height {
                for x in 0..width {
                    for c in 0..channels {
                        data.push(f(x, y, c, t));
                    }
                }
            }
        }
        Self {
            height,
            width,
            channels,
            frames,
            data,
        }
    }

    pub fn get(&self, x: usize, y: usize, c: usize, t: usize) -> f64 {
        self.data[((t * self.height + y) * self.width + x) * self.channels + c]
    }

    pub fn from_raw(raw: &RawArray) -> Self {
        Self::from_fn(raw.height, raw.width, raw.channels, raw.frames, |x, y, c, t| {
            raw.get(y, x, c, t) as f64
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_round_trip_and_layout() {
        let vol = Volume::from_fn(3, 4, 5, |x, y, t| (x + 10 * y + 100 * t) as f64);
        let raw = vol.to_raw();
        // frame index is the fastest axis on disk
        assert_eq!(raw.data[0], 0.0);
        assert_eq!(raw.data[1], 100.0);
        let mut buf = Vec::new();
        raw.write_to(&mut buf).unwrap();
        assert!(buf.starts_with(b"3 4 1 5\n"));
        let back = RawArray::read_from(buf.as_slice()).unwrap();
        assert_eq!(Volume::from_raw(&back).unwrap(), vol);
    }

    #[test]
    fn malformed_inputs() {
        assert!(RawArray::read_from(&b"2 2 1"[..]).is_err());
        assert!(RawArray::read_from(&b"2 2 1\n"[..]).is_err());
        assert!(RawArray::read_from(&b"2 x 1 1\n"[..]).is_err());
        let mut short = b"1 1 1 2\n".to_vec();
        short.extend_from_slice(&1f32.to_le_bytes());
        assert!(RawArray::read_from(short.as_slice()).is_err());
        short.extend_from_slice(&1f32.to_le_bytes());
        assert!(RawArray::read_from(short.as_slice()).is_ok());
        short.push(0);
        assert!(RawArray::read_from(short.as_slice()).is_err());
    }
}
