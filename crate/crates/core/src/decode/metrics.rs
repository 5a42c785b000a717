use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DecodeError;

fn check_lengths(truth: &[usize], pred: &[usize], classes: usize) -> Result<(), DecodeError> {
    if truth.len() != pred.len() {
        return Err(DecodeError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    if let Some(&label) = truth.iter().chain(pred).find(|&&y| y >= classes) {
        return Err(DecodeError::LabelOutOfRange { label, labels: classes });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassAccuracy {
    /// `None` for classes absent from the truth.
    pub per_class: Vec<Option<f64>>,
    /// Mean over classes present in the truth.
    pub average: f64,
}

pub fn per_class_accuracy(
    truth: &[usize],
    pred: &[usize],
    classes: usize,
) -> Result<ClassAccuracy, DecodeError> {
    let cm = ConfusionMatrix::from_labels(truth, pred, classes)?;
    if truth.is_empty() {
        return Err(DecodeError::EmptySequence);
    }
    let per_class: Vec<Option<f64>> = (0..classes)
        .map(|c| {
            let support = cm.support(c);
            (support > 0).then(|| cm.counts[c][c] as f64 / support as f64)
        })
        .collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    Ok(ClassAccuracy {
        average: present.iter().sum::<f64>() / present.len() as f64,
        per_class,
    })
}

/// Counts indexed `[truth][prediction]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_labels(truth: &[usize], pred: &[usize], classes: usize) -> Result<Self, DecodeError> {
        let mut cm = Self::new(classes);
        cm.accumulate(truth, pred)?;
        Ok(cm)
    }

    pub fn accumulate(&mut self, truth: &[usize], pred: &[usize]) -> Result<(), DecodeError> {
        check_lengths(truth, pred, self.counts.len())?;
        for (&t, &p) in truth.iter().zip(pred) {
            self.counts[t][p] += 1;
        }
        Ok(())
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// One-vs-rest ROC. Tied scores form a single threshold step, so the
/// trapezoid area equals the rank statistic with ties counted as one half.
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<RocCurve, DecodeError> {
    if scores.len() != truth.len() {
        return Err(DecodeError::LengthMismatch {
            truth: truth.len(),
            pred: scores.len(),
        });
    }
    let pos = truth.iter().filter(|&&b| b).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(DecodeError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (x0, y0) = *points.last().expect("nonempty");
        let (x1, y1) = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        auc += (x1 - x0) * (y0 + y1) / 2.0;
        points.push((x1, y1));
    }
    Ok(RocCurve { points, auc })
}

/// Evaluation summary written as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: BTreeMap<String, f64>,
    pub average: f64,
    pub confusion: Vec<Vec<u64>>,
    pub auc: BTreeMap<String, f64>,
}

impl MetricsReport {
    /// Pooled over all frames. `scores` holds one row per frame; classes
    /// without both positives and negatives get no AUC entry.
    pub fn compute(
        truth: &[usize],
        pred: &[usize],
        scores: &[Vec<f64>],
        names: &[String],
    ) -> Result<Self, DecodeError> {
        let classes = names.len();
        let acc = per_class_accuracy(truth, pred, classes)?;
        let cm = ConfusionMatrix::from_labels(truth, pred, classes)?;
        if scores.len() != truth.len() {
            return Err(DecodeError::LengthMismatch {
                truth: truth.len(),
                pred: scores.len(),
            });
        }
        let mut auc = BTreeMap::new();
        for (c, name) in names.iter().enumerate() {
            let column: Vec<f64> = scores.iter().map(|r| r[c]).collect();
            let positives: Vec<bool> = truth.iter().map(|&y| y == c).collect();
            match roc_auc(&column, &positives) {
                Ok(curve) => {
                    auc.insert(name.clone(), curve.auc);
                }
                Err(DecodeError::DegenerateLabels) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(Self {
            per_class: names
                .iter()
                .zip(&acc.per_class)
                .filter_map(|(n, a)| a.map(|a| (n.clone(), a)))
                .collect(),
            average: acc.average,
            confusion: cm.counts,
            auc,
        })
    }
}
