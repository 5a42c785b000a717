//! Binary checkpoint: an ASCII header naming the config and the blocks,
//! followed by every block as little-endian `f64` in declaration order.
//!
//! ```text
//! MVLADDM-CHECKPOINT 1
//! config {"views":2,...}
//! block view0.lstm_w 8 64
//! ...
//! end
//! <raw data>
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::params::block_shapes;
use super::{Block, ModelConfig, ModelError, ModelParams};
use crate::autodiff::Tensor;

const MAGIC: &str = "MVLADDM-CHECKPOINT 1";

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

pub fn write_checkpoint<W: Write>(params: &ModelParams, mut w: W) -> Result<(), ModelError> {
    let config = serde_json::to_string(&params.config).map_err(|e| bad(e.to_string()))?;
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "config {config}")?;
    for b in &params.blocks {
        writeln!(w, "block {} {} {}", b.name, b.value.rows(), b.value.cols())?;
    }
    writeln!(w, "end")?;
    for b in &params.blocks {
        for v in b.value.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn header_line<R: BufRead>(r: &mut R) -> Result<String, ModelError> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(bad("unexpected end of header"));
    }
    Ok(line.trim_end_matches('\n').to_string())
}

pub fn read_checkpoint<R: BufRead>(mut r: R) -> Result<ModelParams, ModelError> {
    if header_line(&mut r)? != MAGIC {
        return Err(bad("not a checkpoint (bad magic line)"));
    }
    let line = header_line(&mut r)?;
    let json = line.strip_prefix("config ").ok_or_else(|| bad("missing config line"))?;
    let config: ModelConfig = serde_json::from_str(json).map_err(|e| bad(format!("config: {e}")))?;
    config.validate()?;
    let expected = block_shapes(&config);
    let mut shapes = Vec::with_capacity(expected.len());
    loop {
        let line = header_line(&mut r)?;
        if line == "end" {
            break;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        let ["block", name, rows, cols] = fields[..] else {
            return Err(bad(format!("malformed header line {line:?}")));
        };
        let dim = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad dimension {s:?}")));
        shapes.push((name.to_string(), [dim(rows)?, dim(cols)?]));
    }
    if shapes != expected {
        return Err(bad("block list does not match the stored config"));
    }
    let mut blocks = Vec::with_capacity(shapes.len());
    let mut buf = [0u8; 8];
    for (name, shape) in shapes {
        let mut data = Vec::with_capacity(shape[0] * shape[1]);
        for _ in 0..shape[0] * shape[1] {
            r.read_exact(&mut buf).map_err(|_| bad(format!("truncated data in block {name}")))?;
            data.push(f64::from_le_bytes(buf));
        }
        blocks.push(Block {
            name,
            value: Tensor::new(shape.to_vec(), data)?,
        });
    }
    if r.read(&mut buf)? != 0 {
        return Err(bad("trailing bytes after the last block"));
    }
    Ok(ModelParams { config, blocks })
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<(), ModelError> {
    write_checkpoint(params, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams, ModelError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let p = ModelParams::init(&ModelConfig::default()).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&p, &mut bytes).unwrap();
        let q = read_checkpoint(&bytes[..]).unwrap();
        assert_eq!(p, q);
        let mut again = Vec::new();
        write_checkpoint(&q, &mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn truncated_and_padded_rejected() {
        let p = ModelParams::init(&ModelConfig::default()).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&p, &mut bytes).unwrap();
        assert!(read_checkpoint(&bytes[..bytes.len() - 3]).is_err());
        bytes.push(0);
        assert!(read_checkpoint(&bytes[..]).is_err());
    }
}
