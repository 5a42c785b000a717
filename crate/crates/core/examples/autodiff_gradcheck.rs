//! Builds a small two-layer network on the tape and compares its reverse-mode
//! gradient with central differences.

use mvladdm::autodiff::{NodeId, Tape, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn loss(w1: &Tensor, w2: &Tensor, x: &Tensor) -> (Tape, NodeId, [NodeId; 2]) {
    let mut tape = Tape::new();
    let xi = tape.constant(x.clone());
    let a = tape.param(w1.clone());
    let b = tape.param(w2.clone());
    let h = tape.matmul(xi, a).unwrap();
    let h = tape.tanh(h);
    let y = tape.matmul(h, b).unwrap();
    let lse = tape.log_sum_exp(y);
    let l = tape.mean(lse);
    (tape, l, [a, b])
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Tensor::uniform(&[5, 3], 1.0, &mut rng);
    let w1 = Tensor::uniform(&[3, 4], 1.0, &mut rng);
    let w2 = Tensor::uniform(&[4, 2], 1.0, &mut rng);

    let (tape, l, [a, _]) = loss(&w1, &w2, &x);
    let grads = tape.backward(l).unwrap();
    let g = grads.wrt(a);
    println!("loss = {:.6}", tape.value(l).scalar_value().unwrap());

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..w1.len() {
        let mut plus = w1.clone();
        plus.data_mut()[i] += h;
        let mut minus = w1.clone();
        minus.data_mut()[i] -= h;
        let value = |w: &Tensor| {
            let (t, l, _) = loss(w, &w2, &x);
            t.value(l).scalar_value().unwrap()
        };
        let fd = (value(&plus) - value(&minus)) / (2.0 * h);
        worst = worst.max((fd - g.data()[i]).abs());
    }
    println!("max |analytic - finite difference| over w1: {worst:.2e}");
}
