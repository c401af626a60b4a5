use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_representation, DetectorConfig, FeaturePipeline, Mode, RepresentationConfig};
use crate::classifiers::{auc, calibrate, train_svm, AttributeDetector, DetectorBank};
use crate::data::Dataset;
use crate::error::{KdicaError, Result};
use crate::rng::{derive_seed, substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DetectParams {
    pub representation: RepresentationConfig,
    pub detector: DetectorConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeStatus {
    Ok,
    /// Only one label value among the training samples.
    SkippedDegenerateTrain,
    /// Only one label value among the test samples, so AUC is undefined.
    UndefinedOnTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeResult {
    pub index: usize,
    pub name: String,
    pub auc: Option<f64>,
    pub status: AttributeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub mode: Mode,
    pub params: DetectParams,
    pub num_train: usize,
    pub num_test: usize,
    pub train_classes: Vec<i64>,
    pub test_classes: Vec<i64>,
    pub attributes: Vec<AttributeResult>,
    /// Macro average over attributes with a defined AUC.
    pub mean_auc: Option<f64>,
    pub skipped: Vec<String>,
    pub warnings: Vec<String>,
}

impl DetectionReport {
    /// Fraction of attributes that could not be trained.
    pub fn skipped_ratio(&self) -> f64 {
        let n = self
            .attributes
            .iter()
            .filter(|a| a.status == AttributeStatus::SkippedDegenerateTrain)
            .count();
        n as f64 / self.attributes.len().max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct DetectionOutcome {
    pub pipeline: FeaturePipeline,
    pub bank: DetectorBank,
    /// `T x A` decision scores on the test set.
    pub scores: DMatrix<f64>,
    /// `T x A` calibrated probabilities on the test set.
    pub probabilities: DMatrix<f64>,
    pub report: DetectionReport,
}

fn label_column(attributes: &DMatrix<f64>, a: usize) -> Vec<bool> {
    attributes.column(a).iter().map(|&v| v == 1.0).collect()
}

/// Stratified holdout: `fraction` of each label value, at least one each.
/// `None` when a label value has fewer than two samples.
fn calibration_split(labels: &[bool], fraction: f64, rng: &mut impl rand::Rng) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut fit_idx = Vec::new();
    let mut hold_idx = Vec::new();
    for value in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == value).collect();
        if idx.len() < 2 {
            return None;
        }
        idx.shuffle(rng);
        let k = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len() - 1);
        hold_idx.extend_from_slice(&idx[..k]);
        fit_idx.extend_from_slice(&idx[k..]);
    }
    fit_idx.sort_unstable();
    hold_idx.sort_unstable();
    Some((fit_idx, hold_idx))
}

/// Trains one calibrated linear detector per attribute column.
///
/// The calibrator is fit on a stratified holdout scored by a detector trained
/// on the remaining samples; the returned detector is then retrained on all
/// samples. Attributes with a single label value are left out.
pub fn train_detector_bank(
    features: &DMatrix<f64>,
    attributes: &DMatrix<f64>,
    names: &[String],
    cfg: &DetectorConfig,
    seed: u64,
) -> Result<DetectorBank> {
    if features.nrows() != attributes.nrows() {
        return Err(KdicaError::DimensionMismatch(format!(
            "{} feature rows, {} attribute rows",
            features.nrows(),
            attributes.nrows()
        )));
    }
    let results: Vec<Result<(Option<AttributeDetector>, f64)>> = (0..attributes.ncols())
        .into_par_iter()
        .map(|a| {
            let labels = label_column(attributes, a);
            let prior = labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64;
            let svm_seed = derive_seed(seed, Stream::Svm, a as u64);
            let detector = match train_svm(features, &labels, cfg.c, svm_seed, &cfg.svm) {
                Ok(d) => d,
                Err(KdicaError::DegenerateAttribute) => return Ok((None, prior)),
                Err(e) => return Err(e),
            };
            let mut rng = substream(seed, Stream::Calibration, a as u64);
            let held_out = calibration_split(&labels, cfg.calibration_fraction, &mut rng).and_then(|(fit_idx, hold_idx)| {
                let fit_x = features.select_rows(&fit_idx);
                let fit_y: Vec<bool> = fit_idx.iter().map(|&i| labels[i]).collect();
                let partial = train_svm(&fit_x, &fit_y, cfg.c, svm_seed, &cfg.svm).ok()?;
                let hold_scores = partial.decisions(&features.select_rows(&hold_idx));
                let hold_y: Vec<bool> = hold_idx.iter().map(|&i| labels[i]).collect();
                calibrate(&hold_scores, &hold_y).ok()
            });
            let calibrator = match held_out {
                Some(c) => c,
                // too few samples of one label to hold any out
                None => calibrate(&detector.decisions(features), &labels)?,
            };
            Ok((Some(AttributeDetector { detector, calibrator }), prior))
        })
        .collect();
    let mut detectors = Vec::with_capacity(results.len());
    let mut fallback = Vec::with_capacity(results.len());
    for r in results {
        let (d, p) = r?;
        detectors.push(d);
        fallback.push(p);
    }
    Ok(DetectorBank {
        attribute_names: names.to_vec(),
        detectors,
        fallback_probability: fallback,
    })
}

/// Learns the representation on `train`, trains calibrated detectors and
/// scores them on `test`. AUC is measured on the calibrated probabilities.
pub fn detect_attributes(train: &Dataset, test: &Dataset, params: &DetectParams) -> Result<DetectionOutcome> {
    if train.num_attributes() != test.num_attributes() {
        return Err(KdicaError::DimensionMismatch(format!(
            "train has {} attributes, test has {}",
            train.num_attributes(),
            test.num_attributes()
        )));
    }
    if train.dim() != test.dim() {
        return Err(KdicaError::DimensionMismatch(format!(
            "train has {} features, test has {}",
            train.dim(),
            test.dim()
        )));
    }
    let mut warnings = Vec::new();
    let shared: Vec<i64> = train
        .class_ids()
        .iter()
        .filter(|c| test.class_ids().contains(c))
        .copied()
        .collect();
    if !shared.is_empty() {
        let msg = format!("classes {shared:?} appear in both train and test");
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let pipeline = fit_representation(train, &params.representation, &mut warnings)?;
    let train_x = pipeline.apply(train.features())?;
    let test_x = pipeline.apply(test.features())?;
    let bank = train_detector_bank(&train_x, train.attributes(), train.attribute_names(), &params.detector, params.seed)?;
    let scores = bank.scores(&test_x);
    let probabilities = bank.probabilities(&test_x);

    let mut attributes = Vec::with_capacity(bank.num_attributes());
    let mut skipped = Vec::new();
    for (a, det) in bank.detectors.iter().enumerate() {
        let name = train.attribute_names()[a].clone();
        let (auc_value, status) = if det.is_none() {
            skipped.push(name.clone());
            (None, AttributeStatus::SkippedDegenerateTrain)
        } else {
            let labels = label_column(test.attributes(), a);
            let probs: Vec<f64> = probabilities.column(a).iter().copied().collect();
            match auc(&probs, &labels) {
                Ok(v) => (Some(v), AttributeStatus::Ok),
                Err(KdicaError::UndefinedAuc(_)) => (None, AttributeStatus::UndefinedOnTest),
                Err(e) => return Err(e),
            }
        };
        attributes.push(AttributeResult { index: a, name, auc: auc_value, status });
    }
    if !skipped.is_empty() {
        let msg = format!("attributes with a single label value in training were skipped: {skipped:?}");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let valid: Vec<f64> = attributes.iter().filter_map(|a| a.auc).collect();
    let mean_auc = (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64);

    let report = DetectionReport {
        mode: params.representation.mode,
        params: *params,
        num_train: train.num_samples(),
        num_test: test.num_samples(),
        train_classes: train.class_ids().to_vec(),
        test_classes: test.class_ids().to_vec(),
        attributes,
        mean_auc,
        skipped,
        warnings,
    };
    Ok(DetectionOutcome {
        pipeline,
        bank,
        scores,
        probabilities,
        report,
    })
}
