//! Fits the projection on a synthetic training set, maps unseen domains
//! through it and round-trips the model through a file.
//!
//! ```text
//! cargo run --release --example fit_transform
//! ```

use kdica::apps::{fit_representation, Mode, RepresentationConfig};
use kdica::container::ModelContainer;
use kdica::kdica::{pencil_diagnostics, KdicaInputs};
use kdica::synthetic::{generate, SynthSpec};

fn main() -> kdica::Result<()> {
    let data = generate(&SynthSpec { seed: 3, ..Default::default() })?;
    let cfg = RepresentationConfig {
        mode: Mode::Kdica,
        gamma: 0.5,
        num_components: 10,
        ..Default::default()
    };
    let mut warnings = Vec::new();
    let pipeline = fit_representation(&data.train, &cfg, &mut warnings)?;
    let model = pipeline.model().expect("kdica mode learns a projection");

    let spectrum: Vec<String> = model.eigenvalues.iter().map(|v| format!("{v:.4}")).collect();
    println!("eigenvalues: {}", spectrum.join(" "));

    let normalized = kdica::data::l2_normalize(data.train.features());
    let inputs = KdicaInputs::from_dataset(&data.train.with_features(normalized)?, &cfg.kernel)?;
    println!("objective value: {:.6}", model.objective_value(&inputs, cfg.gamma)?);

    let test_features = pipeline.apply(data.test.features())?;
    println!("{} test samples mapped to {} dimensions", test_features.nrows(), test_features.ncols());

    let path = std::env::temp_dir().join("kdica-fit-transform.kdmc");
    ModelContainer { pipeline: pipeline.clone(), detectors: None }.save(&path)?;
    let reloaded = ModelContainer::load(&path)?;
    println!(
        "reloaded model reproduces the mapping exactly: {}",
        reloaded.pipeline.apply(data.test.features())? == test_features
    );

    let obj = kdica::kdica::assemble_objective(&inputs.kernel, &inputs.attributes, &inputs.q, cfg.gamma, model.epsilon)?;
    let pairs = kdica::kdica::EigenPairs {
        values: model.eigenvalues.clone(),
        vectors: model.projection.clone(),
    };
    let diag = pencil_diagnostics(&obj.lhs, &obj.rhs, &pairs);
    println!(
        "relative residual {:.1e}, orthonormality error {:.1e}",
        diag.relative_residual, diag.orthonormality_error
    );
    Ok(())
}
