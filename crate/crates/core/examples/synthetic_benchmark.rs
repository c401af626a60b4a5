//! Unseen-domain attribute AUC of raw, UDICA and KDICA features over ten
//! seeds of the synthetic generator.
//!
//! ```text
//! cargo run --release --example synthetic_benchmark [flip_probability]
//! ```

use kdica::apps::{detect_attributes, DetectParams, Mode};
use kdica::synthetic::{generate, SynthSpec};

fn main() -> kdica::Result<()> {
    let flip = std::env::args().nth(1).map(|s| s.parse().expect("flip probability")).unwrap_or(0.1);
    let modes = [Mode::Raw, Mode::Udica, Mode::Kdica];
    let mut totals = [0.0; 3];
    println!("{:>4} {:>8} {:>8} {:>8}", "seed", "raw", "udica", "kdica");
    for seed in 0..10 {
        let data = generate(&SynthSpec {
            seed,
            flip_probability: flip,
            ..Default::default()
        })?;
        let mut row = [0.0; 3];
        for (i, mode) in modes.into_iter().enumerate() {
            let mut params = DetectParams::default();
            params.representation.mode = mode;
            params.seed = seed;
            row[i] = detect_attributes(&data.train, &data.test, &params)?.report.mean_auc.unwrap_or(f64::NAN);
            totals[i] += row[i] / 10.0;
        }
        println!("{seed:>4} {:>8.4} {:>8.4} {:>8.4}", row[0], row[1], row[2]);
    }
    println!("mean {:>8.4} {:>8.4} {:>8.4}", totals[0], totals[1], totals[2]);
    Ok(())
}
