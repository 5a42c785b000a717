//! Fuses per-view Gaussian experts into every subset posterior and reports
//! their KL divergence to the prior.

use mvladdm::gaussian::{kl_to_standard, poe_fuse_subset, DiagonalGaussian};
use mvladdm::model::subsets;

fn main() {
    // a confident top view and a vaguer side view that disagree on dim 0
    let experts = vec![
        DiagonalGaussian::new(vec![1.5, 0.0], vec![0.2, 0.9]).unwrap(),
        DiagonalGaussian::new(vec![-0.5, 0.4], vec![0.8, 0.5]).unwrap(),
    ];
    for s in subsets(experts.len()) {
        let post = poe_fuse_subset(&experts, &s).unwrap();
        println!(
            "views {:?}: mean {:?} variance {:?} KL {:.4}",
            post.members,
            post.gamma.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            post.lambda.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            kl_to_standard(&post)
        );
    }
}
