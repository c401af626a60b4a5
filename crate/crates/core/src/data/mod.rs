//! Datasets of feature vectors with category (domain) labels and binary
//! attribute annotations.
//!
//! Category ids are remapped to the contiguous range `0..C` on construction;
//! the original ids are kept in [`Dataset::class_ids`] so reports can refer
//! back to them.

mod io;
pub mod kdmx;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KdicaError, Result};

pub use io::{
    load_dataset, read_labels, read_matrix, save_dataset, write_labels, write_matrix,
    AttributeLevel, Manifest, MatrixFormat,
};

/// Class-level attribute table: row `r` is the signature of original class `ids[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSignatures {
    pub ids: Vec<i64>,
    pub values: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    domain_labels: Vec<usize>,
    attributes: DMatrix<f64>,
    attribute_names: Vec<String>,
    class_ids: Vec<i64>,
    class_signatures: Option<DMatrix<f64>>,
}

/// Where the per-sample attribute matrix comes from.
#[derive(Debug, Clone)]
pub enum AttributeSource {
    /// One annotation row per sample.
    PerSample(DMatrix<f64>),
    /// Every sample inherits the signature of its class.
    FromSignatures,
}

impl Dataset {
    /// Builds and validates a dataset. `labels` are arbitrary integer class ids.
    pub fn new(
        features: DMatrix<f64>,
        labels: &[i64],
        attributes: AttributeSource,
        attribute_names: Option<Vec<String>>,
        signatures: Option<ClassSignatures>,
    ) -> Result<Self> {
        Self::new_named(features, labels, attributes, attribute_names, signatures, &SourceNames::default())
    }

    pub(crate) fn new_named(
        features: DMatrix<f64>,
        labels: &[i64],
        attributes: AttributeSource,
        attribute_names: Option<Vec<String>>,
        signatures: Option<ClassSignatures>,
        names: &SourceNames,
    ) -> Result<Self> {
        let m = features.nrows();
        if m == 0 || features.ncols() == 0 {
            return Err(KdicaError::DimensionMismatch(format!(
                "{}: feature matrix must be non-empty, got {}x{}",
                names.features,
                m,
                features.ncols()
            )));
        }
        if let Some((idx, _)) = features.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            // column-major storage
            return Err(KdicaError::NonFinite(format!(
                "{} at row {}, column {}",
                names.features,
                idx % m,
                idx / m
            )));
        }
        if labels.len() != m {
            return Err(KdicaError::DimensionMismatch(format!(
                "{} has {} labels but {} has {} rows",
                names.labels,
                labels.len(),
                names.features,
                m
            )));
        }

        let class_ids: Vec<i64> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let index_of: BTreeMap<i64, usize> =
            class_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let domain_labels: Vec<usize> = labels.iter().map(|id| index_of[id]).collect();

        let class_signatures = match signatures {
            Some(sig) => {
                if sig.ids.len() != sig.values.nrows() {
                    return Err(KdicaError::DimensionMismatch(format!(
                        "{}: {} signature ids for {} rows",
                        names.signatures,
                        sig.ids.len(),
                        sig.values.nrows()
                    )));
                }
                check_binary(&sig.values, &names.signatures)?;
                let mut table = DMatrix::zeros(class_ids.len(), sig.values.ncols());
                for (c, id) in class_ids.iter().enumerate() {
                    let row = sig.ids.iter().position(|s| s == id).ok_or_else(|| {
                        KdicaError::parse(
                            names.signatures.clone(),
                            format!("no signature for class {id}"),
                        )
                    })?;
                    table.set_row(c, &sig.values.row(row));
                }
                Some(table)
            }
            None => None,
        };

        let attributes = match attributes {
            AttributeSource::PerSample(a) => {
                if a.nrows() != m {
                    return Err(KdicaError::DimensionMismatch(format!(
                        "{} has {} rows but {} has {} rows",
                        names.attributes,
                        a.nrows(),
                        names.features,
                        m
                    )));
                }
                check_binary(&a, &names.attributes)?;
                a
            }
            AttributeSource::FromSignatures => {
                let table = class_signatures.as_ref().ok_or_else(|| {
                    KdicaError::InvalidConfig(
                        "class-level attributes requested but no class signatures given".into(),
                    )
                })?;
                DMatrix::from_fn(m, table.ncols(), |i, j| table[(domain_labels[i], j)])
            }
        };
        let a = attributes.ncols();
        if a == 0 {
            return Err(KdicaError::DimensionMismatch("attribute matrix has no columns".into()));
        }
        if let Some(table) = &class_signatures {
            if table.ncols() != a {
                return Err(KdicaError::DimensionMismatch(format!(
                    "{} has {} columns but there are {} attributes",
                    names.signatures,
                    table.ncols(),
                    a
                )));
            }
        }
        let attribute_names = match attribute_names {
            Some(n) if n.len() != a => {
                return Err(KdicaError::DimensionMismatch(format!(
                    "{} attribute names for {} attributes",
                    n.len(),
                    a
                )))
            }
            Some(n) => n,
            None => (0..a).map(|i| format!("attr_{i}")).collect(),
        };

        Ok(Dataset {
            features,
            domain_labels,
            attributes,
            attribute_names,
            class_ids,
            class_signatures,
        })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// Contiguous domain ids in `0..num_domains()`.
    pub fn domain_labels(&self) -> &[usize] {
        &self.domain_labels
    }

    pub fn attributes(&self) -> &DMatrix<f64> {
        &self.attributes
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    /// Original class id of each contiguous domain id.
    pub fn class_ids(&self) -> &[i64] {
        &self.class_ids
    }

    /// Signature table with one row per contiguous domain id, if known.
    pub fn class_signatures(&self) -> Option<&DMatrix<f64>> {
        self.class_signatures.as_ref()
    }

    pub fn num_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_attributes(&self) -> usize {
        self.attributes.ncols()
    }

    pub fn num_domains(&self) -> usize {
        self.class_ids.len()
    }

    pub fn domain_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_domains()];
        for &y in &self.domain_labels {
            counts[y] += 1;
        }
        counts
    }

    /// Original class id of every sample.
    pub fn original_labels(&self) -> Vec<i64> {
        self.domain_labels.iter().map(|&y| self.class_ids[y]).collect()
    }

    /// A copy with the feature matrix replaced (same sample order).
    pub fn with_features(&self, features: DMatrix<f64>) -> Result<Self> {
        if features.nrows() != self.num_samples() {
            return Err(KdicaError::DimensionMismatch(format!(
                "replacement features have {} rows, dataset has {}",
                features.nrows(),
                self.num_samples()
            )));
        }
        Ok(Dataset {
            features,
            ..self.clone()
        })
    }

    /// Samples at `indices`, in that order, with domain ids re-contiguated.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let features = self.features.select_rows(indices);
        let attributes = self.attributes.select_rows(indices);
        let present: BTreeSet<usize> = indices.iter().map(|&i| self.domain_labels[i]).collect();
        let remap: BTreeMap<usize, usize> =
            present.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let domain_labels = indices.iter().map(|&i| remap[&self.domain_labels[i]]).collect();
        let class_ids = present.iter().map(|&old| self.class_ids[old]).collect();
        let kept: Vec<usize> = present.into_iter().collect();
        let class_signatures = self.class_signatures.as_ref().map(|t| t.select_rows(&kept));
        Dataset {
            features,
            domain_labels,
            attributes,
            attribute_names: self.attribute_names.clone(),
            class_ids,
            class_signatures,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SourceNames {
    pub features: String,
    pub labels: String,
    pub attributes: String,
    pub signatures: String,
}

impl Default for SourceNames {
    fn default() -> Self {
        SourceNames {
            features: "features".into(),
            labels: "labels".into(),
            attributes: "attributes".into(),
            signatures: "class_signatures".into(),
        }
    }
}

fn check_binary(m: &DMatrix<f64>, file: &str) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 && v != 1.0 {
                return Err(KdicaError::NonBinaryAttribute {
                    file: file.to_string(),
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// Scales every row to unit Euclidean norm; all-zero rows stay zero.
pub fn l2_normalize(features: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = features.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

/// Class-disjoint train/test partition, in original class ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_classes: BTreeSet<i64>,
    pub test_classes: BTreeSet<i64>,
    pub seed: u64,
}

impl SplitSpec {
    /// Random class split with `num_test` held-out classes.
    pub fn random(class_ids: &[i64], num_test: usize, seed: u64) -> Result<Self> {
        if num_test == 0 || num_test >= class_ids.len() {
            return Err(KdicaError::InvalidConfig(format!(
                "cannot hold out {num_test} of {} classes",
                class_ids.len()
            )));
        }
        let mut ids = class_ids.to_vec();
        ids.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ids.shuffle(&mut rng);
        let (test, train) = ids.split_at(num_test);
        Ok(SplitSpec {
            train_classes: train.iter().copied().collect(),
            test_classes: test.iter().copied().collect(),
            seed,
        })
    }
}

/// Routes samples into (train, test) by class membership.
pub fn split_by_classes(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if let Some(&c) = spec.train_classes.intersection(&spec.test_classes).next() {
        return Err(KdicaError::OverlappingSplit(c));
    }
    for &c in spec.train_classes.iter().chain(&spec.test_classes) {
        if !ds.class_ids.contains(&c) {
            return Err(KdicaError::UnknownClass(c));
        }
    }
    let pick = |set: &BTreeSet<i64>| -> Result<Dataset> {
        let idx: Vec<usize> = (0..ds.num_samples())
            .filter(|&i| set.contains(&ds.class_ids[ds.domain_labels[i]]))
            .collect();
        if idx.is_empty() {
            return Err(KdicaError::EmptyDomain("split side selects no samples".into()));
        }
        Ok(ds.subset(&idx))
    };
    Ok((pick(&spec.train_classes)?, pick(&spec.test_classes)?))
}
