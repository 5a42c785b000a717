use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CliError, RunArgs, RunConfig};
use crate::decode::{export_ethogram, per_class_accuracy, viterbi_decode, Ethogram, MetricsReport};
use crate::model::{
    load_checkpoint, predict_unaries, save_checkpoint, train, ModelConfig, ModelError, ModelParams,
    TraceRow,
};
use crate::synth::{generate, load_dataset, save_dataset, MultiViewSequence};

const SPLIT_STREAM: u64 = 7;

fn other(e: impl std::fmt::Display) -> CliError {
    CliError::Other(e.to_string())
}

/// Seeded shuffle, then the first `floor(0.8 n)` sequences train.
pub fn split_train_test(
    mut seqs: Vec<MultiViewSequence>,
    seed: u64,
) -> (Vec<MultiViewSequence>, Vec<MultiViewSequence>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    seqs.shuffle(&mut rng);
    let test = seqs.split_off(seqs.len() * 4 / 5);
    (seqs, test)
}

pub fn cmd_synth<W: Write>(cfg: &RunConfig, args: &RunArgs, out: &mut W) -> Result<(), CliError> {
    let spec = cfg
        .generator
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let seqs = generate(&spec, cfg.generator.count).map_err(|e| CliError::Config(e.to_string()))?;
    let (train_set, test_set) = split_train_test(seqs, spec.seed);
    for (name, set) in [("train.jsonl", &train_set), ("test.jsonl", &test_set)] {
        let path = args.out.join(name);
        save_dataset(set, &path).map_err(other)?;
        writeln!(out, "{}", path.display())?;
    }
    Ok(())
}

fn dataset_path(explicit: &Option<PathBuf>, out: &Path, default: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out.join(default))
}

fn load(path: &Path) -> Result<Vec<MultiViewSequence>, CliError> {
    load_dataset(path).map_err(|e| other(format!("{}: {e}", path.display())))
}

/// Fills in dims the config leaves empty and applies the ablation flags.
fn resolve_model_config(
    cfg: &RunConfig,
    args: &RunArgs,
    data: &[MultiViewSequence],
) -> ModelConfig {
    let mut m = cfg.model.clone();
    if m.feature_dims.is_empty() {
        if let Some(first) = data.first() {
            m.views = first.views.len();
            m.feature_dims = first.feature_dims();
        }
    }
    if let Some(mode) = args.attention_override() {
        m.attention = mode;
    }
    if args.no_transitions {
        m.transitions = false;
    }
    m
}

fn decode_all(
    seqs: &[MultiViewSequence],
    params: &ModelParams,
) -> Result<Vec<Ethogram>, CliError> {
    let trans = params.decode_transitions();
    seqs.iter()
        .filter(|s| !s.is_empty())
        .map(|s| {
            let u = predict_unaries(s, params).map_err(other)?;
            viterbi_decode(&u, &trans).map_err(other)
        })
        .collect()
}

fn pooled_accuracy(seqs: &[MultiViewSequence], decoded: &[Ethogram], labels: usize) -> Result<f64, CliError> {
    let truth: Vec<usize> = seqs.iter().flat_map(|s| s.labels.iter().copied()).collect();
    let pred: Vec<usize> = decoded.iter().flat_map(|e| e.labels.iter().copied()).collect();
    Ok(per_class_accuracy(&truth, &pred, labels).map_err(other)?.average)
}

pub fn write_trace<W: Write>(trace: &[TraceRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "epoch,loss,ll_term,elbo_term")?;
    for r in trace {
        writeln!(w, "{},{},{},{}", r.epoch, r.loss, r.ll_term, r.elbo_term)?;
    }
    Ok(())
}

pub fn cmd_train<W: Write>(cfg: &RunConfig, args: &RunArgs, out: &mut W) -> Result<(), CliError> {
    let path = dataset_path(&cfg.data.train, &args.out, "train.jsonl");
    let data = load(&path)?;
    let model_cfg = resolve_model_config(cfg, args, &data);
    let outcome = train(&data, &model_cfg).map_err(|e| match e {
        ModelError::DimMismatch { .. }
        | ModelError::InconsistentViews(_)
        | ModelError::LabelOutOfRange { .. } => CliError::TrainMismatch(e.to_string()),
        ModelError::InvalidConfig(_) | ModelError::TooManyViews { .. } => {
            CliError::Config(e.to_string())
        }
        other_err => other(other_err),
    })?;

    let ckpt = dataset_path(&cfg.data.checkpoint, &args.out, "model.ckpt");
    save_checkpoint(&outcome.params, &ckpt).map_err(other)?;
    let trace_path = args.out.join("loss.csv");
    let mut buf = Vec::new();
    write_trace(&outcome.trace, &mut buf)?;
    fs::write(&trace_path, buf)?;
    writeln!(out, "{}", ckpt.display())?;
    writeln!(out, "{}", trace_path.display())?;

    let decoded = decode_all(&data, &outcome.params)?;
    let acc = pooled_accuracy(&data, &decoded, model_cfg.labels)?;
    writeln!(out, "average train per-class accuracy: {acc:.4}")?;
    Ok(())
}

/// Architecture fields that must agree between a checkpoint and the config.
fn architecture_mismatch(ckpt: &ModelConfig, file: &ModelConfig) -> Option<String> {
    let pairs = [
        ("views", ckpt.views, file.views),
        ("labels", ckpt.labels, file.labels),
        ("latent_dim", ckpt.latent_dim, file.latent_dim),
        ("hidden_dim", ckpt.hidden_dim, file.hidden_dim),
        ("mlp_dim", ckpt.mlp_dim, file.mlp_dim),
        ("embed_dim", ckpt.embed_dim, file.embed_dim),
    ];
    if let Some((name, a, b)) = pairs.iter().find(|(_, a, b)| a != b) {
        return Some(format!("{name}: checkpoint {a}, config {b}"));
    }
    if !file.feature_dims.is_empty() && file.feature_dims != ckpt.feature_dims {
        return Some(format!(
            "feature_dims: checkpoint {:?}, config {:?}",
            ckpt.feature_dims, file.feature_dims
        ));
    }
    None
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn cmd_eval<W: Write>(cfg: &RunConfig, args: &RunArgs, out: &mut W) -> Result<(), CliError> {
    let ckpt = dataset_path(&cfg.data.checkpoint, &args.out, "model.ckpt");
    let mut params = load_checkpoint(&ckpt)
        .map_err(|e| CliError::EvalMismatch(format!("{}: {e}", ckpt.display())))?;
    if let Some(msg) = architecture_mismatch(&params.config, &cfg.model) {
        return Err(CliError::EvalMismatch(msg));
    }
    if let Some(mode) = args.attention_override() {
        params.config.attention = mode;
    }
    if args.no_transitions {
        params.config.transitions = false;
    }
    let test = load(&dataset_path(&cfg.data.test, &args.out, "test.jsonl"))?;
    for s in &test {
        if s.feature_dims() != params.config.feature_dims {
            return Err(CliError::EvalMismatch(format!(
                "sequence {} has feature dims {:?}, checkpoint expects {:?}",
                s.id,
                s.feature_dims(),
                params.config.feature_dims
            )));
        }
        if let Some(&y) = s.labels.iter().find(|&&y| y >= params.config.labels) {
            return Err(CliError::EvalMismatch(format!(
                "sequence {} has label {y}; checkpoint has {} labels",
                s.id, params.config.labels
            )));
        }
    }
    let test: Vec<MultiViewSequence> = test.into_iter().filter(|s| !s.is_empty()).collect();
    let decoded = decode_all(&test, &params)?;

    let labels = params.config.labels;
    let names = cfg.class_names(labels);
    let truth: Vec<usize> = test.iter().flat_map(|s| s.labels.iter().copied()).collect();
    let pred: Vec<usize> = decoded.iter().flat_map(|e| e.labels.iter().copied()).collect();
    let scores: Vec<Vec<f64>> = decoded.iter().flat_map(|e| e.scores.iter().cloned()).collect();
    let report = MetricsReport::compute(&truth, &pred, &scores, &names).map_err(other)?;

    let dir = args.out.join("ethograms");
    fs::create_dir_all(&dir)?;
    for (s, e) in test.iter().zip(&decoded) {
        let stem = file_stem(&s.id);
        export_ethogram(e, labels, &dir.join(format!("{stem}.pred"))).map_err(other)?;
        let truth = Ethogram::from_labels(s.labels.clone());
        export_ethogram(&truth, labels, &dir.join(format!("{stem}.truth"))).map_err(other)?;
    }
    let metrics_path = args.out.join("metrics.json");
    let mut json = serde_json::to_string_pretty(&report).map_err(other)?;
    json.push('\n');
    fs::write(&metrics_path, json)?;
    writeln!(out, "{}", metrics_path.display())?;
    writeln!(out, "{}", dir.display())?;
    writeln!(out, "average test per-class accuracy: {:.4}", report.average)?;
    Ok(())
}
