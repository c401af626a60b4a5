//! Multi-attribute retrieval: samples are ranked by the summed probabilities
//! of the queried attributes and scored against samples having all of them.
//!
//! ```text
//! cargo run --release --example retrieval
//! ```

use kdica::apps::{detect_attributes, retrieve, DetectParams};
use kdica::synthetic::{generate, SynthSpec};

fn main() -> kdica::Result<()> {
    let data = generate(&SynthSpec {
        num_domains: 10,
        test_domains: 4,
        seed: 4,
        ..Default::default()
    })?;
    let out = detect_attributes(&data.train, &data.test, &DetectParams::default())?;

    for query in [vec![0], vec![1], vec![0, 1], vec![0, 2], vec![1, 2, 3]] {
        let r = retrieve(&out.probabilities, data.test.attributes(), &query)?;
        let top: Vec<usize> = r.ranking.iter().take(5).copied().collect();
        println!(
            "query {:?}: {} relevant of {}, AUC {}, top 5 {:?}",
            query,
            r.num_relevant,
            r.ranking.len(),
            r.auc.map(|v| format!("{v:.3}")).unwrap_or_else(|| "undefined".into()),
            top
        );
    }
    // a single-attribute query scores exactly like the detector itself
    let single = retrieve(&out.probabilities, data.test.attributes(), &[0])?;
    println!("query [0] AUC equals detection AUC: {}", single.auc == out.report.attributes[0].auc);
    Ok(())
}
