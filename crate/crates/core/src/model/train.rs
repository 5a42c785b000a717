use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BatchLoss, ModelConfig, ModelError, ModelParams, WindowBatch};
use crate::autodiff::Adam;
use crate::synth::{class_frequencies, MultiViewSequence};

const MIN_FREQUENCY: f64 = 1e-4;
const MONITOR_WINDOWS: usize = 32;

const STREAM_SAMPLER: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_MONITOR: u64 = 4;

/// Per-class sampling weight `1 / max(freq, 1e-4)`.
pub fn balanced_weights(frequencies: &[f64]) -> Vec<f64> {
    frequencies.iter().map(|f| 1.0 / f.max(MIN_FREQUENCY)).collect()
}

/// Draws fixed-length training windows, optionally weighted by the inverse
/// frequency of the centre frame's label.
#[derive(Clone, Debug)]
pub struct WindowSampler {
    /// `(sequence index, start frame)`
    candidates: Vec<(usize, usize)>,
    centre_labels: Vec<usize>,
    dist: WeightedIndex<f64>,
    window: usize,
}

impl WindowSampler {
    pub fn new(
        seqs: &[MultiViewSequence],
        window: usize,
        labels: usize,
        balanced: bool,
    ) -> Result<Self, ModelError> {
        let shortest = seqs.iter().map(MultiViewSequence::len).min().ok_or(ModelError::EmptyDataset)?;
        if shortest == 0 {
            return Err(ModelError::EmptyDataset);
        }
        let window = window.min(shortest);
        let weights = balanced_weights(&class_frequencies(seqs, labels));
        let mut candidates = Vec::new();
        let mut centre_labels = Vec::new();
        let mut w = Vec::new();
        for (i, s) in seqs.iter().enumerate() {
            for start in 0..=s.len() - window {
                let y = s.labels[start + window / 2];
                candidates.push((i, start));
                centre_labels.push(y);
                w.push(if balanced { weights[y] } else { 1.0 });
            }
        }
        let dist = WeightedIndex::new(&w)
            .map_err(|e| ModelError::InvalidConfig(format!("sampling weights: {e}")))?;
        Ok(Self {
            candidates,
            centre_labels,
            dist,
            window,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Index into the candidate list.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }

    pub fn candidate(&self, k: usize) -> (usize, usize) {
        self.candidates[k]
    }

    pub fn centre_label(&self, k: usize) -> usize {
        self.centre_labels[k]
    }

    pub fn batch<R: rand::Rng + ?Sized>(
        &self,
        seqs: &[MultiViewSequence],
        size: usize,
        rng: &mut R,
    ) -> Vec<MultiViewSequence> {
        (0..size)
            .map(|_| {
                let (i, start) = self.candidates[self.draw(rng)];
                seqs[i].window(start, self.window)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub loss: f64,
    pub ll_term: f64,
    pub elbo_term: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Objective on a fixed monitor batch after each epoch.
    pub trace: Vec<TraceRow>,
}

pub(crate) fn check_dataset(seqs: &[MultiViewSequence], cfg: &ModelConfig) -> Result<(), ModelError> {
    for s in seqs {
        if s.views.len() != cfg.views {
            return Err(ModelError::InconsistentViews(format!(
                "sequence {} has {} views, config expects {}",
                s.id,
                s.views.len(),
                cfg.views
            )));
        }
        for (v, (m, &d)) in s.views.iter().zip(&cfg.feature_dims).enumerate() {
            if m.cols != d {
                return Err(ModelError::DimMismatch {
                    what: format!("sequence {} view {v} features", s.id),
                    expected: d,
                    got: m.cols,
                });
            }
        }
        if let Some(&label) = s.labels.iter().find(|&&y| y >= cfg.labels) {
            return Err(ModelError::LabelOutOfRange {
                label,
                labels: cfg.labels,
            });
        }
    }
    Ok(())
}

/// Adam on the joint objective; deterministic in `cfg.seed`.
pub fn train(seqs: &[MultiViewSequence], cfg: &ModelConfig) -> Result<TrainOutcome, ModelError> {
    cfg.validate()?;
    if seqs.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    check_dataset(seqs, cfg)?;
    let mut params = ModelParams::init(cfg)?;
    let sampler = WindowSampler::new(seqs, cfg.window, cfg.labels, cfg.balanced_sampling)?;
    let uniform = WindowSampler::new(seqs, cfg.window, cfg.labels, false)?;

    let rng_for = |stream| {
        let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
        r.set_stream(stream);
        r
    };
    let mut sample_rng = rng_for(STREAM_SAMPLER);
    let mut noise_rng = rng_for(STREAM_NOISE);
    let mut monitor_rng = rng_for(STREAM_MONITOR);
    let monitor_windows = uniform.batch(seqs, MONITOR_WINDOWS, &mut monitor_rng);
    let monitor = WindowBatch::sampled(&monitor_windows, cfg.latent_dim, &mut monitor_rng)?;

    let mut adam = Adam::new(cfg.lr);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        for _ in 0..cfg.batches_per_epoch {
            let windows = sampler.batch(seqs, cfg.batch_size, &mut sample_rng);
            let batch = WindowBatch::sampled(&windows, cfg.latent_dim, &mut noise_rng)?;
            let grads = BatchLoss::build(&params, &batch)?.gradients()?;
            let mut tensors = params.tensors();
            adam.step(&mut tensors, &grads)?;
            params.set_tensors(tensors);
        }
        let terms = BatchLoss::build(&params, &monitor)?.terms;
        log::info!(
            "epoch {epoch}: loss {:.5} (ll {:.5}, elbo {:.5})",
            terms.loss,
            terms.ll_term,
            terms.elbo_term
        );
        trace.push(TraceRow {
            epoch,
            loss: terms.loss,
            ll_term: terms.ll_term,
            elbo_term: terms.elbo_term,
        });
    }
    Ok(TrainOutcome { params, trace })
}
