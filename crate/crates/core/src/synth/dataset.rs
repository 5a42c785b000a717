//! Line-delimited JSON dataset files: one [`MultiViewSequence`] per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SynthError;

/// Row-major `rows x cols` matrix of per-frame features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "feature matrix data length");
        Self { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Rows `start..start + len` as a new matrix.
    pub fn rows_range(&self, start: usize, len: usize) -> Self {
        Self::new(
            len,
            self.cols,
            self.data[start * self.cols..(start + len) * self.cols].to_vec(),
        )
    }
}

/// Per-view feature streams with frame-aligned labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiViewSequence {
    pub id: String,
    pub labels: Vec<usize>,
    pub views: Vec<FeatureMatrix>,
}

impl MultiViewSequence {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    pub fn feature_dims(&self) -> Vec<usize> {
        self.views.iter().map(|v| v.cols).collect()
    }

    /// Frames `start..start + len` of every view.
    pub fn window(&self, start: usize, len: usize) -> Self {
        Self {
            id: format!("{}[{start}..{}]", self.id, start + len),
            labels: self.labels[start..start + len].to_vec(),
            views: self.views.iter().map(|v| v.rows_range(start, len)).collect(),
        }
    }

    fn check(&self) -> Result<(), String> {
        for (i, v) in self.views.iter().enumerate() {
            if v.data.len() != v.rows * v.cols {
                return Err(format!(
                    "view {i}: {} values for {}x{} matrix",
                    v.data.len(),
                    v.rows,
                    v.cols
                ));
            }
            if v.rows != self.labels.len() {
                return Err(format!(
                    "view {i}: {} rows but {} labels",
                    v.rows,
                    self.labels.len()
                ));
            }
        }
        Ok(())
    }
}

pub fn write_dataset<W: Write>(seqs: &[MultiViewSequence], writer: W) -> Result<(), SynthError> {
    let mut w = BufWriter::new(writer);
    for s in seqs {
        serde_json::to_writer(&mut w, s).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: BufRead>(reader: R) -> Result<Vec<MultiViewSequence>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let seq: MultiViewSequence =
            serde_json::from_str(&line).map_err(|e| SynthError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
        seq.check().map_err(|message| SynthError::DimMismatch {
            line: lineno,
            message,
        })?;
        out.push(seq);
    }
    Ok(out)
}

pub fn save_dataset(seqs: &[MultiViewSequence], path: &Path) -> Result<(), SynthError> {
    write_dataset(seqs, File::create(path)?)
}

pub fn load_dataset(path: &Path) -> Result<Vec<MultiViewSequence>, SynthError> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// Frame-level label distribution over `num_classes` classes.
pub fn class_frequencies(seqs: &[MultiViewSequence], num_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; num_classes];
    for s in seqs {
        for &y in &s.labels {
            if y < num_classes {
                counts[y] += 1;
            }
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return vec![0.0; num_classes];
    }
    counts.into_iter().map(|c| c as f64 / total as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq() -> MultiViewSequence {
        MultiViewSequence {
            id: "a".into(),
            labels: vec![0, 1, 1],
            views: vec![
                FeatureMatrix::new(3, 2, vec![0.1, 1e-300, -3.5, 2.0 / 3.0, 7.0, f64::MAX]),
                FeatureMatrix::new(3, 1, vec![1.0, 2.0, 3.0]),
            ],
        }
    }

    #[test]
    fn empty_round_trip() {
        let mut buf = Vec::new();
        write_dataset(&[], &mut buf).unwrap();
        assert!(buf.is_empty());
        assert!(read_dataset(buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn single_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_dataset(&[seq()], &mut buf).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back, vec![seq()]);
    }

    #[test]
    fn truncated_line_names_the_line() {
        let mut buf = Vec::new();
        write_dataset(&[seq(), seq()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut = &text[..text.len() - 20];
        match read_dataset(cut.as_bytes()) {
            Err(SynthError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dim_mismatch_detected() {
        let line = r#"{"id":"x","labels":[0,1],"views":[{"rows":2,"cols":2,"data":[1.0,2.0,3.0]}]}"#;
        assert!(matches!(
            read_dataset(line.as_bytes()),
            Err(SynthError::DimMismatch { line: 1, .. })
        ));
    }

    #[test]
    fn frequencies() {
        let mut s = seq();
        s.labels = vec![0, 0, 0, 1];
        s.views.clear();
        assert_eq!(class_frequencies(&[s.clone()], 2), vec![0.75, 0.25]);
        s.labels = vec![1; 4];
        assert_eq!(class_frequencies(&[s], 3), vec![0.0, 1.0, 0.0]);
    }
}
