//! Linear-chain scoring with per-frame unaries and pairwise transitions.

use crate::autodiff::log_sum_exp_slice;

/// `sum_t unary[t][y_t] + sum_{t>=1} trans[y_{t-1}][y_t]`.
pub fn sequence_score(unaries: &[Vec<f64>], trans: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut s = 0.0;
    for (t, (u, &y)) in unaries.iter().zip(labels).enumerate() {
        s += u[y];
        if t > 0 {
            s += trans[labels[t - 1]][y];
        }
    }
    s
}

/// Log of the sum of `exp(sequence_score)` over every label sequence,
/// by the forward recursion in log space. Zero for an empty sequence.
pub fn log_partition(unaries: &[Vec<f64>], trans: &[Vec<f64>]) -> f64 {
    let Some(first) = unaries.first() else {
        return 0.0;
    };
    let n = first.len();
    let mut alpha = first.clone();
    let mut buf = vec![0.0; n];
    for u in &unaries[1..] {
        let next: Vec<f64> = (0..n)
            .map(|j| {
                for i in 0..n {
                    buf[i] = alpha[i] + trans[i][j];
                }
                u[j] + log_sum_exp_slice(&buf)
            })
            .collect();
        alpha = next;
    }
    log_sum_exp_slice(&alpha)
}

/// `log P(labels | unaries)` under the chain.
pub fn sequence_log_likelihood(unaries: &[Vec<f64>], trans: &[Vec<f64>], labels: &[usize]) -> f64 {
    sequence_score(unaries, trans, labels) - log_partition(unaries, trans)
}
