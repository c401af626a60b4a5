//! Per-attribute linear detectors, probability calibration and ranking metrics.

mod auc;
mod platt;
mod svm;

use nalgebra::DMatrix;

pub use auc::auc;
pub use platt::{calibrate, PlattCalibrator, MAX_SLOPE};
pub use svm::{svm_objective, train_svm, train_svm_traced, LinearDetector, SvmOptions};

/// A trained detector with its calibrator.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDetector {
    pub detector: LinearDetector,
    pub calibrator: PlattCalibrator,
}

/// One entry per attribute; `None` marks an attribute skipped in training,
/// whose constant `fallback_probability` is reported instead.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorBank {
    pub attribute_names: Vec<String>,
    pub detectors: Vec<Option<AttributeDetector>>,
    pub fallback_probability: Vec<f64>,
}

impl DetectorBank {
    pub fn num_attributes(&self) -> usize {
        self.detectors.len()
    }

    pub fn skipped(&self) -> Vec<usize> {
        self.detectors
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_none())
            .map(|(i, _)| i)
            .collect()
    }

    /// Decision scores (`T x A`); skipped attributes score 0.
    pub fn scores(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(features.nrows(), self.num_attributes());
        for (a, det) in self.detectors.iter().enumerate() {
            if let Some(det) = det {
                for (t, s) in det.detector.decisions(features).into_iter().enumerate() {
                    out[(t, a)] = s;
                }
            }
        }
        out
    }

    /// Calibrated probabilities (`T x A`).
    pub fn probabilities(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        let scores = self.scores(features);
        DMatrix::from_fn(features.nrows(), self.num_attributes(), |t, a| match &self.detectors[a] {
            Some(det) => det.calibrator.probability(scores[(t, a)]),
            None => self.fallback_probability[a],
        })
    }
}
