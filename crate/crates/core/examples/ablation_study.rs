//! Trains one model per seed and evaluates it with each decoding ablation:
//! full, uniform fusion weights, shared posterior only, and no transitions.
//!
//! Usage: `cargo run --release --example ablation_study -- [seeds] [epochs]`

use mvladdm::cli::split_train_test;
use mvladdm::decode::{per_class_accuracy, viterbi_decode};
use mvladdm::model::{predict_unaries, train, AttentionMode, ModelConfig, ModelParams};
use mvladdm::synth::{generate, GeneratorConfig, MultiViewSequence};

fn accuracy(p: &ModelParams, test: &[MultiViewSequence]) -> f64 {
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for s in test {
        let u = predict_unaries(s, p).unwrap();
        pred.extend(viterbi_decode(&u, &p.decode_transitions()).unwrap().labels);
        truth.extend(&s.labels);
    }
    per_class_accuracy(&truth, &pred, p.config.labels).unwrap().average
}

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let seeds = args.next().unwrap_or(3);
    let epochs = args.next().unwrap_or(30);
    let g = GeneratorConfig::default();
    let (train_set, test_set) = split_train_test(generate(&g.build().unwrap(), g.count).unwrap(), 0);

    println!("seed  full    uniform shared  no-trans");
    for seed in 0..seeds as u64 {
        let cfg = ModelConfig { epochs, seed, ..ModelConfig::default() };
        let full = train(&train_set, &cfg).unwrap().params;
        let with = |f: &dyn Fn(&mut ModelConfig)| {
            let mut p = full.clone();
            f(&mut p.config);
            accuracy(&p, &test_set)
        };
        println!(
            "{seed:>4}  {:.4}  {:.4}  {:.4}  {:.4}",
            accuracy(&full, &test_set),
            with(&|c| c.attention = AttentionMode::Uniform),
            with(&|c| c.attention = AttentionMode::SharedOnly),
            with(&|c| c.transitions = false),
        );
    }
}
