//! Viterbi-decodes hand-written unaries, then writes the ethogram as CSV and
//! SVG into the system temp directory and prints the metrics.

use mvladdm::decode::{export_ethogram, viterbi_decode, Ethogram, MetricsReport};

fn main() {
    // noisy per-frame evidence for a 0 -> 1 -> 2 behaviour sequence
    let unaries: Vec<Vec<f64>> = (0..30)
        .map(|t| {
            let true_label = t / 10;
            let flicker = if t % 7 == 3 { 1.2 } else { 0.0 };
            (0..3)
                .map(|n| if n == true_label { 1.0 } else if n == (true_label + 1) % 3 { flicker } else { 0.0 })
                .collect()
        })
        .collect();
    let sticky: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { -1.0 }).collect()).collect();
    let smooth = viterbi_decode(&unaries, &sticky).unwrap();
    let framewise = viterbi_decode(&unaries, &[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]).unwrap();
    println!("with transitions: {} segments", smooth.segments.len());
    println!("framewise:        {} segments", framewise.segments.len());

    let truth = Ethogram::from_labels((0..30).map(|t| t / 10).collect());
    let names: Vec<String> = ["rest", "walk", "groom"].map(String::from).to_vec();
    let report = MetricsReport::compute(&truth.labels, &smooth.labels, &unaries, &names).unwrap();
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    let stem = std::env::temp_dir().join("mvladdm_example.pred");
    export_ethogram(&smooth, 3, &stem).unwrap();
    println!("wrote {}.csv and {}.svg", stem.display(), stem.display());
}
