use super::{DecodeError, Ethogram};

/// `sum_t unary[t][y_t] + sum_{t>=1} trans[y_{t-1}][y_t]`.
pub fn path_score(unaries: &[Vec<f64>], trans: &[Vec<f64>], path: &[usize]) -> f64 {
    let mut s = 0.0;
    for (t, &y) in path.iter().enumerate() {
        s += unaries[t][y];
        if t > 0 {
            s += trans[path[t - 1]][y];
        }
    }
    s
}

/// Highest-scoring label path. Among equally good paths the
/// lexicographically smallest is returned.
///
/// Runs the max-sum recursion backwards (best completion from each state)
/// and then picks labels greedily from the first frame, taking the lowest
/// index on ties.
pub fn viterbi_decode(unaries: &[Vec<f64>], trans: &[Vec<f64>]) -> Result<Ethogram, DecodeError> {
    let t_len = unaries.len();
    let n = unaries.first().ok_or(DecodeError::EmptySequence)?.len();
    for (row, u) in unaries.iter().enumerate() {
        if u.len() != n || n == 0 {
            return Err(DecodeError::RaggedScores { row, expected: n, got: u.len() });
        }
    }
    if trans.len() != n || trans.iter().any(|r| r.len() != n) {
        return Err(DecodeError::RaggedScores {
            row: 0,
            expected: n,
            got: trans.len(),
        });
    }
    // best[t][i]: best score of frames t+1.. given y_t = i
    let mut best = vec![vec![0.0; n]; t_len];
    for t in (0..t_len - 1).rev() {
        for i in 0..n {
            best[t][i] = (0..n)
                .map(|j| trans[i][j] + unaries[t + 1][j] + best[t + 1][j])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let argmax = |score: &dyn Fn(usize) -> f64| {
        let mut arg = 0;
        let mut top = score(0);
        for j in 1..n {
            let s = score(j);
            if s > top {
                top = s;
                arg = j;
            }
        }
        arg
    };
    let mut labels = Vec::with_capacity(t_len);
    labels.push(argmax(&|j| unaries[0][j] + best[0][j]));
    for t in 1..t_len {
        let prev = labels[t - 1];
        labels.push(argmax(&|j| trans[prev][j] + unaries[t][j] + best[t][j]));
    }
    Ok(Ethogram::new(labels, unaries.to_vec()))
}
