mod common;

use mvladdm::gaussian::{
    kl_to_standard, poe_fuse, poe_fuse_subset, reparam_sample, DiagonalGaussian,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn expert(d: usize) -> impl Strategy<Value = DiagonalGaussian> {
    (
        prop::collection::vec(-3.0..3.0f64, d),
        prop::collection::vec(0.2..1.0f64, d),
    )
        .prop_map(|(m, v)| DiagonalGaussian::new(m, v).unwrap())
}

fn experts() -> impl Strategy<Value = Vec<DiagonalGaussian>> {
    (1usize..4, 1usize..5).prop_flat_map(|(v, d)| prop::collection::vec(expert(d), v))
}

proptest! {
    #[test]
    fn fusion_ignores_expert_order(es in experts(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = es.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = poe_fuse(&es).unwrap();
        let b = poe_fuse(&shuffled).unwrap();
        for j in 0..a.dim() {
            prop_assert!((a.gamma[j] - b.gamma[j]).abs() <= 1e-12 * a.gamma[j].abs().max(1.0));
            prop_assert!((a.lambda[j] - b.lambda[j]).abs() <= 1e-12 * a.lambda[j].abs().max(1.0));
        }
    }

    #[test]
    fn adding_the_prior_as_an_expert_changes_nothing(es in experts()) {
        let d = es[0].dim();
        let mut with_prior = es.clone();
        with_prior.push(DiagonalGaussian::standard(d));
        let a = poe_fuse(&es).unwrap();
        let b = poe_fuse(&with_prior).unwrap();
        for j in 0..d {
            prop_assert!((a.gamma[j] - b.gamma[j]).abs() < 1e-12);
            prop_assert!((a.lambda[j] - b.lambda[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn fused_matches_quadrature(es in experts()) {
        let fused = poe_fuse(&es).unwrap();
        for j in 0..fused.dim() {
            let means: Vec<f64> = es.iter().map(|e| e.mean()[j]).collect();
            let vars: Vec<f64> = es.iter().map(|e| e.variance()[j]).collect();
            let (m, s) = common::grid_fusion_1d(&means, &vars, 12.0, 8_000);
            prop_assert!((fused.gamma[j] - m).abs() < 1e-8);
            prop_assert!((fused.lambda[j] - s).abs() < 1e-8);
        }
    }

    #[test]
    fn kl_is_nonnegative(es in experts()) {
        prop_assert!(kl_to_standard(&poe_fuse(&es).unwrap()) >= -1e-15);
    }
}

#[test]
fn subset_of_one_is_the_expert() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let es: Vec<_> = (0..3).map(|_| common::random_expert(&mut rng, 4)).collect();
    for (i, e) in es.iter().enumerate() {
        let f = poe_fuse_subset(&es, &[i]).unwrap();
        assert_eq!(f.gamma, e.mean());
        assert_eq!(f.lambda, e.variance());
        assert!(!f.is_shared());
    }
}

#[test]
fn reparameterised_samples_have_fused_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let es: Vec<_> = (0..3).map(|_| common::random_expert(&mut rng, 2)).collect();
    let post = poe_fuse(&es).unwrap();
    let n = 200_000;
    let (mut s1, mut s2) = (vec![0.0; 2], vec![0.0; 2]);
    for _ in 0..n {
        let noise: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
        let z = reparam_sample(&post, &noise).unwrap();
        for j in 0..2 {
            s1[j] += z[j];
            s2[j] += z[j] * z[j];
        }
    }
    for j in 0..2 {
        let mean = s1[j] / n as f64;
        let var = s2[j] / n as f64 - mean * mean;
        // five standard errors
        let se = (post.lambda[j] / n as f64).sqrt();
        assert!((mean - post.gamma[j]).abs() < 5.0 * se, "mean {j}");
        assert!((var - post.lambda[j]).abs() < 5.0 * post.lambda[j] * (2.0 / n as f64).sqrt());
    }
}
