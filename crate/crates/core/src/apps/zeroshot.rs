//! Zero-shot classification by direct attribute prediction: attribute
//! posteriors are combined against the signatures of unseen classes.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{KdicaError, Result};

/// Posteriors are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` before taking logs.
pub const PROB_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PriorMode {
    /// Attribute frequency over the class table, clipped to `[0.05, 0.95]`.
    #[default]
    Empirical,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotTable {
    pub class_ids: Vec<i64>,
    /// `Z x A`, binary.
    pub signatures: DMatrix<f64>,
    /// Attribute priors in `(0, 1)`.
    pub priors: DVector<f64>,
}

impl ZeroShotTable {
    pub fn new(class_ids: Vec<i64>, signatures: DMatrix<f64>, prior_mode: PriorMode) -> Result<Self> {
        if class_ids.len() != signatures.nrows() || class_ids.is_empty() {
            return Err(KdicaError::DimensionMismatch(format!(
                "{} class ids for {} signatures",
                class_ids.len(),
                signatures.nrows()
            )));
        }
        if signatures.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(KdicaError::InvalidConfig("class signatures must be binary".into()));
        }
        let z = signatures.nrows() as f64;
        let priors = match prior_mode {
            PriorMode::Uniform => DVector::from_element(signatures.ncols(), 0.5),
            PriorMode::Empirical => DVector::from_iterator(
                signatures.ncols(),
                signatures.column_iter().map(|c| (c.sum() / z).clamp(0.05, 0.95)),
            ),
        };
        Ok(ZeroShotTable { class_ids, signatures, priors })
    }

    /// Table of the classes present in `ds`, rows in domain-id order.
    pub fn from_dataset(ds: &Dataset, prior_mode: PriorMode) -> Result<Self> {
        let sig = ds.class_signatures().ok_or_else(|| {
            KdicaError::InvalidConfig("zero-shot classification needs class signatures".into())
        })?;
        Self::new(ds.class_ids().to_vec(), sig.clone(), prior_mode)
    }

    pub fn num_classes(&self) -> usize {
        self.class_ids.len()
    }

    /// Groups of classes sharing one signature; they cannot be told apart.
    pub fn duplicate_signatures(&self) -> Vec<Vec<i64>> {
        let mut groups: BTreeMap<Vec<u8>, Vec<i64>> = BTreeMap::new();
        for (r, id) in self.class_ids.iter().enumerate() {
            let key = self.signatures.row(r).iter().map(|&v| v as u8).collect();
            groups.entry(key).or_default().push(*id);
        }
        groups.into_values().filter(|g| g.len() > 1).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotPrediction {
    /// Row of the table predicted for each sample.
    pub predictions: Vec<usize>,
    /// `T x Z` log-domain class scores.
    pub class_scores: DMatrix<f64>,
}

/// `score(z | x) = sum_i log p(a_i = a_i^z | x) - sum_i log p(a_i = a_i^z)`,
/// argmax over classes with ties going to the lowest row.
pub fn dap_zero_shot(probabilities: &DMatrix<f64>, table: &ZeroShotTable) -> Result<ZeroShotPrediction> {
    let a = table.signatures.ncols();
    if probabilities.ncols() != a {
        return Err(KdicaError::DimensionMismatch(format!(
            "{} attribute probabilities per sample but signatures have {a} attributes",
            probabilities.ncols()
        )));
    }
    let log_p = probabilities.map(|p| p.clamp(PROB_CLIP, 1.0 - PROB_CLIP).ln());
    let log_q = probabilities.map(|p| (1.0 - p.clamp(PROB_CLIP, 1.0 - PROB_CLIP)).ln());
    let prior_term: Vec<f64> = table
        .signatures
        .row_iter()
        .map(|sig| {
            (0..a)
                .map(|i| {
                    let pi = table.priors[i];
                    if sig[i] == 1.0 { pi.ln() } else { (1.0 - pi).ln() }
                })
                .sum()
        })
        .collect();
    let t = probabilities.nrows();
    let z = table.num_classes();
    let class_scores = DMatrix::from_fn(t, z, |s, c| {
        let like: f64 = (0..a)
            .map(|i| if table.signatures[(c, i)] == 1.0 { log_p[(s, i)] } else { log_q[(s, i)] })
            .sum();
        like - prior_term[c]
    });
    let predictions = (0..t)
        .map(|s| {
            let mut best = 0;
            for c in 1..z {
                if class_scores[(s, c)] > class_scores[(s, best)] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(ZeroShotPrediction { predictions, class_scores })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShotAccuracy {
    pub class_ids: Vec<i64>,
    /// `None` for classes without test samples.
    pub per_class: Vec<Option<f64>>,
    /// Mean of the defined per-class accuracies.
    pub mean_per_class: f64,
    pub overall: f64,
}

/// `truth` holds table rows.
pub fn zero_shot_accuracy(pred: &ZeroShotPrediction, truth: &[usize], table: &ZeroShotTable) -> Result<ZeroShotAccuracy> {
    if truth.len() != pred.predictions.len() || truth.is_empty() {
        return Err(KdicaError::DimensionMismatch(format!(
            "{} predictions for {} ground-truth labels",
            pred.predictions.len(),
            truth.len()
        )));
    }
    let z = table.num_classes();
    let mut hits = vec![0usize; z];
    let mut totals = vec![0usize; z];
    for (&p, &t) in pred.predictions.iter().zip(truth) {
        if t >= z {
            return Err(KdicaError::DimensionMismatch(format!("class row {t} out of range")));
        }
        totals[t] += 1;
        if p == t {
            hits[t] += 1;
        }
    }
    let per_class: Vec<Option<f64>> = (0..z)
        .map(|c| (totals[c] > 0).then(|| hits[c] as f64 / totals[c] as f64))
        .collect();
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    Ok(ZeroShotAccuracy {
        class_ids: table.class_ids.clone(),
        mean_per_class: defined.iter().sum::<f64>() / defined.len() as f64,
        overall: hits.iter().sum::<usize>() as f64 / truth.len() as f64,
        per_class,
    })
}
