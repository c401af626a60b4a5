//! Attribute detection on unseen domains with raw, UDICA and KDICA features.
//!
//! ```text
//! cargo run --release --example attribute_detection
//! ```

use kdica::apps::{detect_attributes, DetectParams, Mode};
use kdica::synthetic::{generate, SynthSpec};

fn main() -> kdica::Result<()> {
    let data = generate(&SynthSpec { seed: 1, ..Default::default() })?;
    println!(
        "train classes {:?}, unseen classes {:?}",
        data.train.class_ids(),
        data.test.class_ids()
    );
    for mode in [Mode::Raw, Mode::Udica, Mode::Kdica] {
        let mut params = DetectParams::default();
        params.representation.mode = mode;
        params.seed = 1;
        let out = detect_attributes(&data.train, &data.test, &params)?;
        let per: Vec<String> = out
            .report
            .attributes
            .iter()
            .map(|a| format!("{}={}", a.name, a.auc.map(|v| format!("{v:.3}")).unwrap_or("-".into())))
            .collect();
        println!("{:>6}: mean AUC {:.4}  [{}]", mode.to_string(), out.report.mean_auc.unwrap_or(f64::NAN), per.join(" "));
    }
    Ok(())
}
