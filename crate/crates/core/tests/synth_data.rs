use mvladdm::synth::{
    class_frequencies, generate, read_dataset, write_dataset, FeatureMatrix, GeneratorConfig,
    MultiViewSequence, SynthError,
};
use proptest::prelude::*;

fn frames(seqs: &[MultiViewSequence]) -> usize {
    seqs.iter().map(|s| s.labels.len()).sum()
}

#[test]
fn identity_transition_gives_constant_labels() {
    let cfg = GeneratorConfig {
        transition: Some((0..4).map(|i| (0..4).map(|j| f64::from(u8::from(i == j))).collect()).collect()),
        count: 10,
        ..GeneratorConfig::default()
    };
    for s in generate(&cfg.build().unwrap(), cfg.count).unwrap() {
        assert!(s.labels.iter().all(|&y| y == s.labels[0]));
    }
}

#[test]
fn symmetric_two_state_bigrams_are_uniform() {
    let cfg = GeneratorConfig {
        classes: 2,
        imbalance: vec![0.5, 0.5],
        visibility: vec![vec![true, true]; 2],
        forbidden: vec![],
        transition: Some(vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
        frames: 1000,
        count: 100,
        ..GeneratorConfig::default()
    };
    let seqs = generate(&cfg.build().unwrap(), cfg.count).unwrap();
    let mut counts = [[0usize; 2]; 2];
    for s in &seqs {
        for w in s.labels.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
    }
    let total: usize = counts.iter().flatten().sum();
    for row in counts {
        for c in row {
            assert!((c as f64 / total as f64 - 0.25).abs() < 0.02);
        }
    }
}

#[test]
fn default_chain_is_stationary_at_the_imbalance() {
    let cfg = GeneratorConfig {
        frames: 1000,
        count: 100,
        ..GeneratorConfig::default()
    };
    let seqs = generate(&cfg.build().unwrap(), cfg.count).unwrap();
    assert_eq!(frames(&seqs), 100_000);
    let freq = class_frequencies(&seqs, 4);
    for (f, w) in freq.iter().zip(&cfg.imbalance) {
        assert!((f - w).abs() < 0.02, "{freq:?}");
    }
    // forbidden pair never adjacent, either direction
    for s in &seqs {
        for w in s.labels.windows(2) {
            assert!(w != [1, 2] && w != [2, 1]);
        }
    }
}

#[test]
fn three_to_one_counts_exactly() {
    let s = MultiViewSequence {
        id: "s".into(),
        labels: vec![0, 1, 0, 0],
        views: vec![FeatureMatrix::new(4, 1, vec![0.0; 4])],
    };
    assert_eq!(class_frequencies(&[s], 2), vec![0.75, 0.25]);
}

/// Nearest-class-mean classifier on one view, fitted on `train`.
fn view_accuracy(train: &[MultiViewSequence], test: &[MultiViewSequence], view: usize, classes: usize) -> Vec<f64> {
    let d = train[0].views[view].cols;
    let mut sums = vec![vec![0.0; d]; classes];
    let mut counts = vec![0.0; classes];
    for s in train {
        for (t, &y) in s.labels.iter().enumerate() {
            for (acc, v) in sums[y].iter_mut().zip(s.views[view].row(t)) {
                *acc += v;
            }
            counts[y] += 1.0;
        }
    }
    let means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| s.iter().map(|v| v / c).collect())
        .collect();
    let (mut hit, mut seen) = (vec![0.0; classes], vec![0.0; classes]);
    for s in test {
        for (t, &y) in s.labels.iter().enumerate() {
            let x = s.views[view].row(t);
            let dist = |m: &Vec<f64>| x.iter().zip(m).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let pred = (0..classes).min_by(|&a, &b| dist(&means[a]).total_cmp(&dist(&means[b]))).unwrap();
            seen[y] += 1.0;
            if pred == y {
                hit[y] += 1.0;
            }
        }
    }
    hit.iter().zip(&seen).map(|(h, n)| h / n).collect()
}

#[test]
fn invisible_class_is_at_chance_in_the_blind_view() {
    // classes 1 and 2 are both background in view 0 and distinct in view 1
    let cfg = GeneratorConfig {
        classes: 3,
        imbalance: vec![1.0 / 3.0; 3],
        visibility: vec![vec![true, true], vec![false, true], vec![false, true]],
        forbidden: vec![],
        transition: Some(vec![vec![1.0 / 3.0; 3]; 3]),
        count: 60,
        ..GeneratorConfig::default()
    };
    let seqs = generate(&cfg.build().unwrap(), cfg.count).unwrap();
    let (train, test) = seqs.split_at(40);
    let blind = view_accuracy(train, test, 0, 3);
    let seeing = view_accuracy(train, test, 1, 3);
    assert!((blind[2] - 0.5).abs() < 0.15, "{blind:?}");
    assert!(seeing[2] > 0.9, "{seeing:?}");
}

#[test]
fn generation_is_reproducible_and_well_shaped() {
    let cfg = GeneratorConfig::default();
    let spec = cfg.build().unwrap();
    let bytes = |seqs: &[MultiViewSequence]| {
        let mut buf = Vec::new();
        write_dataset(seqs, &mut buf).unwrap();
        buf
    };
    let a = generate(&spec, 5).unwrap();
    assert_eq!(bytes(&a), bytes(&generate(&spec, 5).unwrap()));
    for s in &a {
        assert_eq!(s.labels.len(), 200);
        for v in &s.views {
            assert_eq!((v.rows, v.cols, v.data.len()), (200, 8, 1600));
        }
    }
    assert!(matches!(generate(&spec, 0), Err(SynthError::InvalidSpec(_))));
}

#[test]
fn truncated_line_reports_its_number() {
    let seqs = generate(&GeneratorConfig::default().build().unwrap(), 3).unwrap();
    let mut buf = Vec::new();
    write_dataset(&seqs, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let broken = format!("{}\n{}\n{}\n", lines[0], &lines[1][..lines[1].len() / 2], lines[2]);
    match read_dataset(broken.as_bytes()) {
        Err(SynthError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected parse error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dataset_round_trips_exactly(
        labels in prop::collection::vec(0usize..5, 1..20),
        scale in -1e6..1e6f64,
    ) {
        let t = labels.len();
        let data: Vec<f64> = (0..t * 3).map(|i| scale / (i as f64 + 0.7)).collect();
        let seq = MultiViewSequence {
            id: "p".into(),
            labels,
            views: vec![FeatureMatrix::new(t, 3, data.clone()), FeatureMatrix::new(t, 1, data[..t].to_vec())],
        };
        let mut buf = Vec::new();
        write_dataset(std::slice::from_ref(&seq), &mut buf).unwrap();
        prop_assert_eq!(read_dataset(buf.as_slice()).unwrap(), vec![seq]);
    }
}
