//! Trains the full model on the default synthetic generator and reports the
//! loss trace and test accuracy.

use mvladdm::cli::split_train_test;
use mvladdm::decode::{per_class_accuracy, viterbi_decode};
use mvladdm::model::{predict_unaries, train, ModelConfig};
use mvladdm::synth::{generate, GeneratorConfig};

fn main() {
    let g = GeneratorConfig::default();
    let seqs = generate(&g.build().unwrap(), g.count).unwrap();
    let (train_set, test_set) = split_train_test(seqs, 0);
    let cfg = ModelConfig::default();
    let out = train(&train_set, &cfg).unwrap();
    for row in out.trace.iter().step_by(5) {
        println!("epoch {:>3}: loss {:.4} (chain {:.4}, elbo {:.4})", row.epoch, row.loss, row.ll_term, row.elbo_term);
    }
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for s in &test_set {
        let u = predict_unaries(s, &out.params).unwrap();
        pred.extend(viterbi_decode(&u, &out.params.decode_transitions()).unwrap().labels);
        truth.extend(&s.labels);
    }
    let acc = per_class_accuracy(&truth, &pred, cfg.labels).unwrap();
    println!("per-class test accuracy {:?}, average {:.4}", acc.per_class, acc.average);
}
