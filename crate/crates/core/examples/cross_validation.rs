//! Two-stage class-stratified cross-validation: `(C, b)` with `gamma = 1`,
//! then `gamma` with `(C, b)` fixed.
//!
//! ```text
//! cargo run --release --example cross_validation
//! ```

use kdica::apps::{cross_validate, CvStage, ExperimentConfig, Mode};
use kdica::synthetic::{generate, SynthSpec};

fn main() -> kdica::Result<()> {
    let data = generate(&SynthSpec { seed: 6, ..Default::default() })?;
    let cfg = ExperimentConfig {
        c_grid: vec![0.1, 1.0, 10.0],
        b_grid: vec![5, 10, 20, 40],
        gamma_grid: vec![0.2, 0.5, 0.8],
        folds: 3,
        seed: 6,
        mode: Mode::Kdica,
        ..Default::default()
    };
    let report = cross_validate(&data.train, &cfg)?;
    for cell in &report.cells {
        let stage = match cell.stage {
            CvStage::Components => "C,b",
            CvStage::Alignment => "gamma",
        };
        println!(
            "{stage:>5}  C={:<5} b={:<3} gamma={:<4} mean AUC {}",
            cell.params.c,
            cell.params.b.map(|b| b.to_string()).unwrap_or_default(),
            cell.params.gamma.map(|g| g.to_string()).unwrap_or("-".into()),
            cell.mean_auc.map(|v| format!("{v:.4}")).unwrap_or("-".into())
        );
    }
    println!("chosen: {:?}", report.chosen);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
