//! Label timelines: run-length segments, CSV export and an SVG strip chart.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use super::DecodeError;

/// Widest SVG rendered at one pixel per frame.
pub const SVG_MAX_WIDTH: usize = 4096;
const BAND_HEIGHT: usize = 10;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Maximal run of one label over frames `start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub label: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ethogram {
    pub labels: Vec<usize>,
    pub segments: Vec<Segment>,
    /// Per-frame scores the labels were decoded from; empty for ground truth.
    pub scores: Vec<Vec<f64>>,
}

fn run_lengths(labels: &[usize]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for (t, &y) in labels.iter().enumerate() {
        match out.last_mut() {
            Some(s) if s.label == y => s.end = t + 1,
            _ => out.push(Segment { label: y, start: t, end: t + 1 }),
        }
    }
    out
}

impl Ethogram {
    pub fn new(labels: Vec<usize>, scores: Vec<Vec<f64>>) -> Self {
        Self {
            segments: run_lengths(&labels),
            labels,
            scores,
        }
    }

    pub fn from_labels(labels: Vec<usize>) -> Self {
        Self::new(labels, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// `label,start_frame,end_frame` with `end_frame` exclusive.
pub fn write_ethogram_csv<W: Write>(e: &Ethogram, mut w: W) -> Result<(), DecodeError> {
    writeln!(w, "label,start_frame,end_frame")?;
    for s in &e.segments {
        writeln!(w, "{},{},{}", s.label, s.start, s.end)?;
    }
    Ok(())
}

/// Parses a segment CSV back into per-frame labels.
pub fn parse_ethogram_csv<R: BufRead>(r: R) -> Result<Ethogram, DecodeError> {
    let mut labels = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let err = |message: String| DecodeError::Parse { line: line_no, message };
        if i == 0 {
            if line.trim() != "label,start_frame,end_frame" {
                return Err(err(format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<usize> = line
            .split(',')
            .map(|f| f.trim().parse::<usize>().map_err(|e| err(format!("{f:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        let [label, start, end] = fields[..] else {
            return Err(err(format!("expected 3 fields, got {}", fields.len())));
        };
        if start != labels.len() || end <= start {
            return Err(err(format!("segment {start}..{end} does not continue at frame {}", labels.len())));
        }
        labels.resize(end, label);
    }
    Ok(Ethogram::from_labels(labels))
}

/// Label shown in each pixel column. Longer sequences are pooled: each
/// column shows the label covering most of its frames (lowest index on ties).
fn pixel_labels(labels: &[usize], classes: usize) -> Vec<usize> {
    let t = labels.len();
    if t <= SVG_MAX_WIDTH {
        return labels.to_vec();
    }
    let mut counts = vec![0usize; classes];
    (0..SVG_MAX_WIDTH)
        .map(|x| {
            let (lo, hi) = (x * t / SVG_MAX_WIDTH, (x + 1) * t / SVG_MAX_WIDTH);
            counts.iter_mut().for_each(|c| *c = 0);
            for &y in &labels[lo..hi] {
                counts[y] += 1;
            }
            let mut best = 0;
            for (k, &c) in counts.iter().enumerate() {
                if c > counts[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Strip chart: one band per label, `classes * 10` pixels tall.
pub fn render_svg(e: &Ethogram, classes: usize) -> String {
    let classes = classes.max(e.labels.iter().max().map_or(1, |m| m + 1));
    let cols = pixel_labels(&e.labels, classes);
    let (w, h) = (cols.len().max(1), classes * BAND_HEIGHT);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for s in run_lengths(&cols) {
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{}" height="{BAND_HEIGHT}" fill="{}"><title>label {}</title></rect>"#,
            s.start,
            s.label * BAND_HEIGHT,
            s.end - s.start,
            PALETTE[s.label % PALETTE.len()],
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `<stem>.csv` and `<stem>.svg`, appending to any dots in `stem`.
pub fn export_ethogram(e: &Ethogram, classes: usize, stem: &Path) -> Result<(), DecodeError> {
    let mut csv = Vec::new();
    write_ethogram_csv(e, &mut csv)?;
    let with = |ext: &str| {
        let mut p = stem.as_os_str().to_owned();
        p.push(ext);
        p
    };
    fs::write(with(".csv"), csv)?;
    fs::write(with(".svg"), render_svg(e, classes))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_one_segment() {
        let e = Ethogram::from_labels(vec![2; 7]);
        assert_eq!(e.segments, vec![Segment { label: 2, start: 0, end: 7 }]);
    }

    #[test]
    fn alternating_gives_t_segments() {
        let e = Ethogram::from_labels((0..9).map(|t| t % 2).collect());
        assert_eq!(e.segments.len(), 9);
    }

    #[test]
    fn csv_round_trip() {
        let e = Ethogram::from_labels(vec![0, 0, 3, 1, 1, 1, 0]);
        let mut buf = Vec::new();
        write_ethogram_csv(&e, &mut buf).unwrap();
        assert_eq!(parse_ethogram_csv(&buf[..]).unwrap().labels, e.labels);
    }

    #[test]
    fn gap_in_csv_rejected() {
        let csv = "label,start_frame,end_frame\n0,0,2\n1,3,4\n";
        assert!(matches!(
            parse_ethogram_csv(csv.as_bytes()),
            Err(DecodeError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn long_sequences_are_pooled() {
        let labels: Vec<usize> = (0..10_000).map(|t| usize::from(t >= 5_000)).collect();
        let svg = render_svg(&Ethogram::from_labels(labels), 2);
        assert!(svg.contains(r#"width="4096" height="20""#));
        assert_eq!(svg.matches("<title>").count(), 2);
    }
}
