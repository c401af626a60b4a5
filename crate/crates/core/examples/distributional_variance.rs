//! Distributional variance `tr(KQ)` of three domains as their means drift
//! apart. Identical domains give zero.
//!
//! ```text
//! cargo run --example distributional_variance
//! ```

use kdica::kernels::{center_train, gram, KernelSpec};
use kdica::variance::{build_q, distributional_variance};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> kdica::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = DMatrix::from_fn(20, 4, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    let labels: Vec<usize> = (0..60).map(|i| i / 20).collect();
    let q = build_q(&labels, 3)?;

    println!("{:>6} {:>12} {:>12}", "shift", "linear", "rbf");
    for shift in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let x = DMatrix::from_fn(60, 4, |i, j| base[(i % 20, j)] + if j == 0 { shift * (i / 20) as f64 } else { 0.0 });
        let lin = distributional_variance(&center_train(&gram(&x, &KernelSpec::linear())?), &q)?;
        let rbf = distributional_variance(&center_train(&gram(&x, &KernelSpec::rbf(1.0))?), &q)?;
        println!("{shift:>6} {lin:>12.6} {rbf:>12.6}");
    }
    Ok(())
}
