use std::fs;
use std::path::Path;

use clap::Parser;
use mvladdm::cli::{run, split_train_test, Cli, CliError};
use mvladdm::features::Volume;
use mvladdm::synth::{generate, load_dataset, GeneratorConfig};

fn cli(args: &[&str]) -> Result<String, CliError> {
    let cli = Cli::try_parse_from(std::iter::once("mvladdm").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    run(&cli, &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

fn config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn code(r: Result<String, CliError>) -> i32 {
    r.map(|_| 0).unwrap_or_else(|e| e.exit_code())
}

const SMALL: &str = "[generator]\ncount = 10\nframes = 40\n[model]\nepochs = 1\nbatches_per_epoch = 2\n";

#[test]
fn ten_sequences_split_eight_two() {
    let seqs = generate(&GeneratorConfig::default().build().unwrap(), 10).unwrap();
    let (train, test) = split_train_test(seqs.clone(), 3);
    assert_eq!((train.len(), test.len()), (8, 2));
    let mut ids: Vec<_> = train.iter().chain(&test).map(|s| s.id.clone()).collect();
    ids.sort();
    let mut all: Vec<_> = seqs.iter().map(|s| s.id.clone()).collect();
    all.sort();
    assert_eq!(ids, all);

    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), SMALL);
    let out = dir.path().to_str().unwrap();
    cli(&["synth", "--config", &c, "--out", out]).unwrap();
    assert_eq!(load_dataset(&dir.path().join("train.jsonl")).unwrap().len(), 8);
    assert_eq!(load_dataset(&dir.path().join("test.jsonl")).unwrap().len(), 2);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let c = config(dir.path(), "[model]\nbogus = 1\n");
    assert_eq!(code(cli(&["synth", "--config", &c, "--out", out])), 2);
    let missing = dir.path().join("nope.toml");
    assert_eq!(code(cli(&["synth", "--config", missing.to_str().unwrap(), "--out", out])), 2);
    let c = config(dir.path(), "[generator]\nimbalance = [0.5]\n");
    assert_eq!(code(cli(&["synth", "--config", &c, "--out", out])), 2);
}

#[test]
fn malformed_binary_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let vol = dir.path().join("bad.bin");
    fs::write(&vol, b"16 16 1 16\n\x00\x01").unwrap();
    let c = config(
        dir.path(),
        &format!("[[encode.clips]]\nid = \"a\"\nviews = [{{ volume = {:?} }}]\n", vol),
    );
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(cli(&["encode", "--config", &c, "--out", out])), 3);
}

#[test]
fn train_dim_mismatch_exits_four_and_eval_mismatch_exits_five() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let c = config(dir.path(), SMALL);
    cli(&["synth", "--config", &c, "--out", out]).unwrap();

    let wrong = config(dir.path(), &format!("{SMALL}feature_dims = [8, 5]\n"));
    assert_eq!(code(cli(&["train", "--config", &wrong, "--out", out])), 4);

    // no checkpoint yet
    let c = config(dir.path(), SMALL);
    assert_eq!(code(cli(&["eval", "--config", &c, "--out", out])), 5);

    cli(&["train", "--config", &c, "--out", out]).unwrap();
    let other_arch = config(dir.path(), &format!("{SMALL}hidden_dim = 7\n"));
    assert_eq!(code(cli(&["eval", "--config", &other_arch, "--out", out])), 5);
    fs::write(dir.path().join("model.ckpt"), b"MVLADDM-CHECKPOINT 1\nconfig {}\n").unwrap();
    let c = config(dir.path(), SMALL);
    assert_eq!(code(cli(&["eval", "--config", &c, "--out", out])), 5);
}

#[test]
fn zero_epochs_write_initial_checkpoint_and_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let c = config(dir.path(), "[generator]\ncount = 5\nframes = 30\n[model]\nepochs = 0\n");
    cli(&["synth", "--config", &c, "--out", out]).unwrap();
    let stdout = cli(&["train", "--config", &c, "--out", out]).unwrap();
    assert!(stdout.lines().last().unwrap().starts_with("average train per-class accuracy: "));
    assert_eq!(
        fs::read_to_string(dir.path().join("loss.csv")).unwrap(),
        "epoch,loss,ll_term,elbo_term\n"
    );
    assert!(dir.path().join("model.ckpt").exists());
}

#[test]
fn eval_writes_metrics_and_both_ethograms() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let c = config(dir.path(), SMALL);
    cli(&["synth", "--config", &c, "--out", out]).unwrap();
    cli(&["train", "--config", &c, "--out", out]).unwrap();
    let stdout = cli(&["eval", "--config", &c, "--out", out, "--no-transitions"]).unwrap();
    assert!(stdout.contains("average test per-class accuracy: "));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["confusion"].as_array().unwrap().len(), 4);
    let files: Vec<String> = fs::read_dir(dir.path().join("ethograms"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    // two test sequences, pred and truth, csv and svg
    assert_eq!(files.len(), 8, "{files:?}");
    assert!(files.iter().any(|f| f.ends_with(".truth.svg")));
}

#[test]
fn ablation_flags_conflict() {
    let r = Cli::try_parse_from(["mvladdm", "eval", "--config", "x", "--no-attention", "--shared-only"]);
    assert!(r.is_err());
}

fn write_volume(path: &Path, v: &Volume) {
    v.to_raw().save(path).unwrap();
}

#[test]
fn encode_blob_and_constant_clips() {
    let dir = tempfile::tempdir().unwrap();
    let (w, h, t) = (20, 20, 40);
    let blob = Volume::from_fn(h, w, t, |x, y, tt| {
        let r2 = (x as f64 - 10.0).powi(2) + (y as f64 - 9.0).powi(2);
        let dt = tt as f64 - 20.0;
        (-r2 / 8.0).exp() * (std::f64::consts::PI * 0.5 * dt).cos() * (-dt * dt / 32.0).exp()
    });
    let flat = Volume::from_fn(h, w, t, |_, _, _| 0.5);
    write_volume(&dir.path().join("blob.bin"), &blob);
    write_volume(&dir.path().join("flat.bin"), &flat);
    let body = format!(
        "[encode]\nwindow = 5\ncomponents = 1\npca_dim = 2\nthreshold = 1e-6\n\
         [[encode.clips]]\nid = \"blob\"\nviews = [{{ volume = {:?} }}]\n\
         [[encode.clips]]\nid = \"flat\"\nviews = [{{ volume = {:?} }}]\n",
        dir.path().join("blob.bin"),
        dir.path().join("flat.bin"),
    );
    let c = config(dir.path(), &body);
    cli(&["encode", "--config", &c, "--out", dir.path().to_str().unwrap()]).unwrap();
    let seqs = load_dataset(&dir.path().join("encoded.jsonl")).unwrap();
    assert_eq!(seqs.len(), 2);
    for s in &seqs {
        assert_eq!(s.labels.len(), t);
        assert_eq!(s.views[0].rows, t);
    }
    let blob_seq = seqs.iter().find(|s| s.id == "blob").unwrap();
    let flat_seq = seqs.iter().find(|s| s.id == "flat").unwrap();
    assert!(blob_seq.views[0].row(20).iter().any(|&v| v != 0.0));
    assert!(flat_seq.views[0].data.iter().all(|&v| v == 0.0));
}
