//! Kernel-alignment domain-invariant component analysis.
//!
//! The projection `B` maximizes
//!
//! ```text
//!   tr(gamma B^T K^2 B / M + (1 - gamma) B^T K L K B)
//!   -------------------------------------------------
//!          tr(B^T K Q K B + B^T K B)
//! ```
//!
//! where `K` is the centered input kernel, `L` the centered attribute kernel
//! and `Q` the distributional-variance coefficients over categories. With
//! `gamma = 1` the attribute labels drop out (the unsupervised variant).
//! Rows of `K B` are the learned features.

mod eig;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{KdicaError, Result};
use crate::kernels::{
    attribute_kernel, center_test_rows, center_train, cross_gram, gram, AttributeKernel,
    CenteringStats, KernelMatrix, KernelSpec,
};
use crate::variance::{build_q, QMatrix};

pub use eig::{fix_signs, generalized_symmetric_eig, pencil_diagnostics, EigenPairs, PencilDiagnostics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdicaConfig {
    /// Weight of data variance against attribute alignment, in `[0, 1]`.
    pub gamma: f64,
    pub num_components: usize,
    /// Ridge added to the right-hand side; `None` picks `1e-8 tr(K) / M`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub kernel: KernelSpec,
}

impl Default for KdicaConfig {
    fn default() -> Self {
        KdicaConfig {
            gamma: 0.5,
            num_components: 30,
            epsilon: None,
            kernel: KernelSpec::default(),
        }
    }
}

impl KdicaConfig {
    pub fn validate(&self, num_samples: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(KdicaError::InvalidConfig(format!("gamma {} not in [0, 1]", self.gamma)));
        }
        if self.num_components == 0 || self.num_components > num_samples {
            return Err(KdicaError::InvalidConfig(format!(
                "number of components {} must be in 1..={num_samples}",
                self.num_components
            )));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(KdicaError::InvalidConfig(format!("ridge epsilon {e} must be >= 0")));
            }
        }
        self.kernel.validate()
    }
}

/// The matrices the objective is built from.
#[derive(Debug, Clone)]
pub struct KdicaInputs {
    pub kernel: KernelMatrix,
    pub attributes: AttributeKernel,
    pub q: QMatrix,
}

impl KdicaInputs {
    pub fn from_dataset(train: &Dataset, kernel: &KernelSpec) -> Result<Self> {
        Ok(KdicaInputs {
            kernel: center_train(&gram(train.features(), kernel)?),
            attributes: attribute_kernel(train.attributes())?,
            q: build_q(train.domain_labels(), train.num_domains())?,
        })
    }

    pub fn default_epsilon(&self) -> f64 {
        let k = &self.kernel.values;
        1e-8 * k.trace() / k.nrows() as f64
    }
}

/// Left- and right-hand sides of the generalized eigenproblem.
#[derive(Debug, Clone)]
pub struct Objective {
    pub lhs: DMatrix<f64>,
    pub rhs: DMatrix<f64>,
}

/// `lhs = gamma K^2 / M + (1 - gamma) K L K`, `rhs = K Q K + K + epsilon I`,
/// both symmetrized after the products.
pub fn assemble_objective(
    k: &KernelMatrix,
    l: &AttributeKernel,
    q: &QMatrix,
    gamma: f64,
    epsilon: f64,
) -> Result<Objective> {
    let m = k.dim();
    if l.values.shape() != (m, m) || q.values.shape() != (m, m) {
        return Err(KdicaError::DimensionMismatch(format!(
            "K is {m}x{m}, L is {:?}, Q is {:?}",
            l.values.shape(),
            q.values.shape()
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(KdicaError::InvalidConfig(format!("gamma {gamma} not in [0, 1]")));
    }
    let kv = &k.values;
    let kk = kv * kv;
    let klk = kv * &l.values * kv;
    let lhs = (kk / m as f64) * gamma + klk * (1.0 - gamma);
    let kqk = kv * &q.values * kv;
    let rhs = kqk + kv + DMatrix::identity(m, m) * epsilon;
    Ok(Objective {
        lhs: eig::symmetrize(&lhs),
        rhs: eig::symmetrize(&rhs),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdicaModel {
    pub config: KdicaConfig,
    /// The ridge actually used.
    pub epsilon: f64,
    /// `M x b`; columns are `rhs`-orthonormal.
    pub projection: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    pub centering: CenteringStats,
    pub train_features: DMatrix<f64>,
}

pub fn fit(train: &Dataset, config: &KdicaConfig) -> Result<KdicaModel> {
    config.validate(train.num_samples())?;
    let inputs = KdicaInputs::from_dataset(train, &config.kernel)?;
    fit_with_inputs(train.features(), &inputs, config)
}

/// Fits from precomputed kernel, attribute kernel and `Q`.
pub fn fit_with_inputs(features: &DMatrix<f64>, inputs: &KdicaInputs, config: &KdicaConfig) -> Result<KdicaModel> {
    let m = inputs.kernel.dim();
    config.validate(m)?;
    if features.nrows() != m {
        return Err(KdicaError::DimensionMismatch(format!(
            "{} feature rows for a {m}x{m} kernel",
            features.nrows()
        )));
    }
    let centering = inputs
        .kernel
        .centering
        .clone()
        .ok_or_else(|| KdicaError::InvalidConfig("the input kernel must be centered".into()))?;
    let epsilon = config.epsilon.unwrap_or_else(|| inputs.default_epsilon());
    let obj = assemble_objective(&inputs.kernel, &inputs.attributes, &inputs.q, config.gamma, epsilon)?;
    let pairs = generalized_symmetric_eig(&obj.lhs, &obj.rhs, config.num_components, epsilon)?;
    Ok(KdicaModel {
        config: *config,
        epsilon,
        projection: pairs.vectors,
        eigenvalues: pairs.values,
        centering,
        train_features: features.clone(),
    })
}

impl KdicaModel {
    pub fn num_components(&self) -> usize {
        self.projection.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.train_features.ncols()
    }

    /// Rows of the centered cross-kernel times `B`.
    pub fn transform(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if features.ncols() != self.input_dim() {
            return Err(KdicaError::DimensionMismatch(format!(
                "model expects {} features per sample, got {}",
                self.input_dim(),
                features.ncols()
            )));
        }
        let raw = cross_gram(features, &self.train_features, &self.config.kernel)?;
        Ok(center_test_rows(&raw, &self.centering)? * &self.projection)
    }

    /// The model restricted to its leading `b` components.
    pub fn truncated(&self, b: usize) -> Result<KdicaModel> {
        if b == 0 || b > self.num_components() {
            return Err(KdicaError::InvalidConfig(format!(
                "cannot keep {b} of {} components",
                self.num_components()
            )));
        }
        Ok(KdicaModel {
            config: KdicaConfig {
                num_components: b,
                ..self.config
            },
            projection: self.projection.columns(0, b).into_owned(),
            eigenvalues: self.eigenvalues.rows(0, b).into_owned(),
            ..self.clone()
        })
    }

    /// Value of the objective at this model's `B`, using the same ridge as the fit.
    pub fn objective_value(&self, inputs: &KdicaInputs, gamma: f64) -> Result<f64> {
        objective_value(&self.projection, inputs, gamma, self.epsilon)
    }
}

/// `tr(B^T lhs B) / tr(B^T rhs B)` for any `B`.
pub fn objective_value(b: &DMatrix<f64>, inputs: &KdicaInputs, gamma: f64, epsilon: f64) -> Result<f64> {
    let obj = assemble_objective(&inputs.kernel, &inputs.attributes, &inputs.q, gamma, epsilon)?;
    if b.nrows() != obj.lhs.nrows() {
        return Err(KdicaError::DimensionMismatch(format!(
            "projection has {} rows for a {}-sample kernel",
            b.nrows(),
            obj.lhs.nrows()
        )));
    }
    let num = (b.transpose() * &obj.lhs * b).trace();
    let den = (b.transpose() * &obj.rhs * b).trace();
    Ok(num / den)
}
