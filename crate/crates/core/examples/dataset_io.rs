//! Builds a small dataset in memory, writes it in both matrix formats,
//! reads it back and splits it into seen and unseen classes.
//!
//! ```text
//! cargo run --example dataset_io
//! ```

use std::collections::BTreeSet;

use kdica::data::{load_dataset, save_dataset, split_by_classes, AttributeSource, ClassSignatures, Dataset, MatrixFormat, SplitSpec};
use nalgebra::DMatrix;

fn main() -> kdica::Result<()> {
    // four classes with ids that are not contiguous
    let class_ids = [3i64, 7, 11, 20];
    let signatures = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let labels: Vec<i64> = (0..24).map(|i| class_ids[i % 4]).collect();
    let features = DMatrix::from_fn(24, 5, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0);

    let ds = Dataset::new(
        features,
        &labels,
        AttributeSource::FromSignatures,
        Some(vec!["furry".into(), "striped".into(), "aquatic".into()]),
        Some(ClassSignatures { ids: class_ids.to_vec(), values: signatures }),
    )?;
    println!(
        "{} samples, {} features, {} attributes, classes {:?}",
        ds.num_samples(),
        ds.dim(),
        ds.num_attributes(),
        ds.class_ids()
    );

    let dir = std::env::temp_dir().join("kdica-dataset-io");
    for format in [MatrixFormat::Csv, MatrixFormat::Kdmx] {
        let manifest = save_dataset(&ds, &dir.join(format.extension()), format)?;
        let back = load_dataset(&manifest)?;
        println!(
            "{:?}: wrote {} and read back identical features: {}",
            format,
            manifest.display(),
            back.features() == ds.features()
        );
    }

    let split = SplitSpec {
        train_classes: BTreeSet::from([3, 7, 11]),
        test_classes: BTreeSet::from([20]),
        seed: 0,
    };
    let (train, test) = split_by_classes(&ds, &split)?;
    println!("train classes {:?}, test classes {:?}", train.class_ids(), test.class_ids());

    let random = SplitSpec::random(ds.class_ids(), 2, 42)?;
    println!("random split holds out {:?}", random.test_classes);
    Ok(())
}
