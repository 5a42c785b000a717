//! Fits a GMM to pooled descriptors and encodes sliding windows as Fisher
//! vectors.

use mvladdm::features::{fisher_encode, gmm_fit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // frames 0..50 emit near (-2, 0), frames 50..100 near (2, 1)
    let points: Vec<(usize, Vec<f64>)> = (0..100)
        .flat_map(|t| {
            let centre = if t < 50 { [-2.0, 0.0] } else { [2.0, 1.0] };
            (0..3)
                .map(|_| (t, centre.iter().map(|c| c + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect()))
                .collect::<Vec<_>>()
        })
        .collect();
    let all: Vec<Vec<f64>> = points.iter().map(|p| p.1.clone()).collect();
    let fit = gmm_fit(&all, 2, 100, 0).unwrap();
    println!("EM log-likelihood {:.2} -> {:.2}", fit.log_likelihoods[0], fit.log_likelihoods.last().unwrap());
    println!("means {:?}", fit.model.means);

    for centre in [10, 49, 90] {
        let window: Vec<Vec<f64>> = points
            .iter()
            .filter(|(t, _)| t.abs_diff(centre) <= 5)
            .map(|p| p.1.clone())
            .collect();
        let fv = fisher_encode(&window, &fit.model).unwrap();
        let fmt: Vec<String> = fv.values.iter().map(|v| format!("{v:+.3}")).collect();
        println!("window at {centre:>2}: {}", fmt.join(" "));
    }
}
