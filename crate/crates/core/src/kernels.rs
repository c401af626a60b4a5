//! Gram matrices, kernel centering (training and out-of-sample) and the
//! attribute target kernel.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KdicaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Rbf,
    Linear,
}

/// How the RBF width is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    /// `exp(-|x - x'|^2 / (2 sigma^2))`
    #[default]
    Sigma,
    /// `exp(-gamma |x - x'|^2)`
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
    #[serde(default)]
    pub parameterization: Bandwidth,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::rbf(1.0)
    }
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Self {
        KernelSpec {
            family: KernelFamily::Rbf,
            bandwidth: sigma,
            parameterization: Bandwidth::Sigma,
        }
    }

    pub fn rbf_gamma(gamma: f64) -> Self {
        KernelSpec {
            family: KernelFamily::Rbf,
            bandwidth: gamma,
            parameterization: Bandwidth::Gamma,
        }
    }

    pub fn linear() -> Self {
        KernelSpec {
            family: KernelFamily::Linear,
            bandwidth: 1.0,
            parameterization: Bandwidth::Sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == KernelFamily::Rbf && !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(KdicaError::InvalidConfig(format!(
                "RBF bandwidth must be positive and finite, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }

    /// Multiplier of the squared distance in the exponent.
    fn rbf_coefficient(&self) -> f64 {
        match self.parameterization {
            Bandwidth::Sigma => 1.0 / (2.0 * self.bandwidth * self.bandwidth),
            Bandwidth::Gamma => self.bandwidth,
        }
    }
}

/// Stored means of the raw training kernel, enough to center new rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringStats {
    pub column_means: DVector<f64>,
    pub grand_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DMatrix<f64>,
    pub spec: KernelSpec,
    /// Present iff the matrix is centered.
    pub centering: Option<CenteringStats>,
}

impl KernelMatrix {
    pub fn is_centered(&self) -> bool {
        self.centering.is_some()
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeKernel {
    pub values: DMatrix<f64>,
    pub centered: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn check_finite(x: &DMatrix<f64>, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(KdicaError::NonFinite(what.to_string()))
    }
}

/// Kernel values `k(a_i, b_j)` for every row pair.
///
/// Each entry is computed independently, so the result does not depend on
/// how rows are spread across threads, and `cross_gram(x, x)` is exactly
/// symmetric.
pub fn cross_gram(a: &DMatrix<f64>, b: &DMatrix<f64>, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if a.ncols() != b.ncols() {
        return Err(KdicaError::DimensionMismatch(format!(
            "feature dimension {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    check_finite(a, "kernel input features")?;
    check_finite(b, "kernel input features")?;
    let ra = rows_of(a);
    let rb = rows_of(b);
    let na: Vec<f64> = ra.iter().map(|r| dot(r, r)).collect();
    let nb: Vec<f64> = rb.iter().map(|r| dot(r, r)).collect();
    let coef = spec.rbf_coefficient();
    let rows: Vec<Vec<f64>> = ra
        .par_iter()
        .zip(na.par_iter())
        .map(|(xi, &ni)| {
            rb.iter()
                .zip(&nb)
                .map(|(xj, &nj)| {
                    let ip = dot(xi, xj);
                    match spec.family {
                        KernelFamily::Linear => ip,
                        KernelFamily::Rbf => {
                            let d2 = (ni + nj - 2.0 * ip).max(0.0);
                            (-coef * d2).exp()
                        }
                    }
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| rows[i][j]))
}

/// Raw (uncentered) Gram matrix of the rows of `features`.
pub fn gram(features: &DMatrix<f64>, spec: &KernelSpec) -> Result<KernelMatrix> {
    Ok(KernelMatrix {
        values: cross_gram(features, features, spec)?,
        spec: *spec,
        centering: None,
    })
}

fn row_means(k: &DMatrix<f64>) -> Vec<f64> {
    let n = k.ncols() as f64;
    k.row_iter().map(|r| r.iter().sum::<f64>() / n).collect()
}

/// `H K H` with `H = I - 11^T / M`, keeping the raw column means and grand
/// mean for [`center_test_rows`].
pub fn center_train(k: &KernelMatrix) -> KernelMatrix {
    let m = k.values.nrows();
    let means = row_means(&k.values);
    // K is symmetric so its column means are its row means.
    let column_means = DVector::from_vec(means.clone());
    let grand_mean = means.iter().sum::<f64>() / m as f64;
    let stats = CenteringStats {
        column_means,
        grand_mean,
    };
    let values = center_with(&k.values, &means, &stats);
    KernelMatrix {
        values,
        spec: k.spec,
        centering: Some(stats),
    }
}

fn center_with(k: &DMatrix<f64>, row_means: &[f64], stats: &CenteringStats) -> DMatrix<f64> {
    DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| {
        (k[(i, j)] - row_means[i]) - stats.column_means[j] + stats.grand_mean
    })
}

/// Centers rows `k(x_t, x_train_m)` consistently with [`center_train`]:
/// `(K_t - 1 colmeans^T) H`.
pub fn center_test_rows(k_test: &DMatrix<f64>, stats: &CenteringStats) -> Result<DMatrix<f64>> {
    if k_test.ncols() != stats.column_means.len() {
        return Err(KdicaError::DimensionMismatch(format!(
            "test kernel has {} columns, training set has {} samples",
            k_test.ncols(),
            stats.column_means.len()
        )));
    }
    Ok(center_with(k_test, &row_means(k_test), stats))
}

/// Raw attribute kernel `L[i][j] = <a_i, a_j>`.
pub fn attribute_kernel_raw(attributes: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(v) = attributes.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(KdicaError::InvalidConfig(format!(
            "non-binary attribute value {v} in attribute kernel input"
        )));
    }
    let a = rows_of(attributes);
    let m = a.len();
    Ok(DMatrix::from_fn(m, m, |i, j| dot(&a[i], &a[j])))
}

/// Centered attribute kernel `H L H`.
pub fn attribute_kernel(attributes: &DMatrix<f64>) -> Result<AttributeKernel> {
    let raw = KernelMatrix {
        values: attribute_kernel_raw(attributes)?,
        spec: KernelSpec::linear(),
        centering: None,
    };
    Ok(AttributeKernel {
        values: center_train(&raw).values,
        centered: true,
    })
}
