//! End-to-end pipelines: attribute detection, hyperparameter selection,
//! zero-shot classification and multi-attribute retrieval.

mod cv;
mod detect;
pub mod report;
mod retrieval;
mod zeroshot;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classifiers::SvmOptions;
use crate::data::{l2_normalize, Dataset};
use crate::error::Result;
use crate::kdica::{fit, KdicaConfig, KdicaModel};
use crate::kernels::KernelSpec;

pub use cv::{class_stratified_folds, cross_validate, CvCell, CvReport, CvStage, ExperimentConfig, Hyperparameters};
pub use detect::{
    detect_attributes, train_detector_bank, AttributeResult, AttributeStatus, DetectParams, DetectionOutcome,
    DetectionReport,
};
pub use retrieval::{retrieve, RetrievalResult};
pub use zeroshot::{dap_zero_shot, zero_shot_accuracy, PriorMode, ZeroShotAccuracy, ZeroShotPrediction, ZeroShotTable};

/// Which representation the detectors are trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Input features as they are.
    Raw,
    /// Projection without attribute alignment (`gamma = 1`).
    Udica,
    #[default]
    Kdica,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "raw" => Ok(Mode::Raw),
            "udica" => Ok(Mode::Udica),
            "kdica" => Ok(Mode::Kdica),
            _ => Err(format!("unknown mode {s:?} (expected raw, udica or kdica)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Raw => "raw",
            Mode::Udica => "udica",
            Mode::Kdica => "kdica",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    Raw,
    Kdica(KdicaModel),
}

/// Optional row normalization followed by a [`FeatureMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePipeline {
    pub normalize: bool,
    pub map: FeatureMap,
}

impl FeaturePipeline {
    pub fn apply(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let x = if self.normalize { l2_normalize(features) } else { features.clone() };
        match &self.map {
            FeatureMap::Raw => Ok(x),
            FeatureMap::Kdica(model) => model.transform(&x),
        }
    }

    pub fn model(&self) -> Option<&KdicaModel> {
        match &self.map {
            FeatureMap::Raw => None,
            FeatureMap::Kdica(m) => Some(m),
        }
    }
}

/// Learned-representation settings shared by the pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentationConfig {
    pub mode: Mode,
    pub gamma: f64,
    pub num_components: usize,
    pub kernel: KernelSpec,
    pub epsilon: Option<f64>,
    pub normalize: bool,
}

impl Default for RepresentationConfig {
    fn default() -> Self {
        RepresentationConfig {
            mode: Mode::Kdica,
            gamma: 0.5,
            num_components: 30,
            kernel: KernelSpec::default(),
            epsilon: None,
            normalize: true,
        }
    }
}

impl RepresentationConfig {
    pub fn effective_gamma(&self) -> f64 {
        match self.mode {
            Mode::Udica => 1.0,
            _ => self.gamma,
        }
    }
}

/// Fits the representation on `train`. A component count above the number
/// of training samples is clipped, with a warning pushed onto `warnings`.
pub fn fit_representation(
    train: &Dataset,
    cfg: &RepresentationConfig,
    warnings: &mut Vec<String>,
) -> Result<FeaturePipeline> {
    let map = match cfg.mode {
        Mode::Raw => FeatureMap::Raw,
        Mode::Udica | Mode::Kdica => {
            let m = train.num_samples();
            let mut b = cfg.num_components;
            if b > m {
                let msg = format!("number of components {b} clipped to the {m} training samples");
                log::warn!("{msg}");
                warnings.push(msg);
                b = m;
            }
            let x = if cfg.normalize { l2_normalize(train.features()) } else { train.features().clone() };
            let ds = train.with_features(x)?;
            let kcfg = KdicaConfig {
                gamma: cfg.effective_gamma(),
                num_components: b,
                epsilon: cfg.epsilon,
                kernel: cfg.kernel,
            };
            FeatureMap::Kdica(fit(&ds, &kcfg)?)
        }
    };
    Ok(FeaturePipeline {
        normalize: cfg.normalize,
        map,
    })
}

/// Linear-detector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub c: f64,
    pub svm: SvmOptions,
    /// Fraction of training samples held out per attribute to fit the calibrator.
    pub calibration_fraction: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            c: 1.0,
            svm: SvmOptions::default(),
            calibration_fraction: 0.2,
        }
    }
}
