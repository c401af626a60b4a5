//! Linear SVM trained by dual coordinate descent on the hinge loss.
//!
//! Minimizes `0.5 (|w|^2 + bias^2) + C sum_i max(0, 1 - y_i (<w, x_i> + bias))`;
//! the bias is handled as an extra constant feature, so it is regularized too.
//! Coordinates are visited in a per-epoch order drawn from the seed, which
//! makes training bitwise reproducible.
//!
//! The primal objective of the dual iterates is not monotone, so the primal
//! value is checkpointed after every epoch and the best checkpoint is
//! returned.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{KdicaError, Result};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearDetector {
    pub weights: DVector<f64>,
    pub bias: f64,
    pub c: f64,
    pub epochs: usize,
}

impl LinearDetector {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn decisions(&self, features: &DMatrix<f64>) -> Vec<f64> {
        (features * &self.weights).iter().map(|v| v + self.bias).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmOptions {
    pub max_epochs: usize,
    /// Stop once the projected-gradient spread of an epoch falls below this.
    pub tolerance: f64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            max_epochs: 2000,
            tolerance: 1e-3,
        }
    }
}

pub fn svm_objective(features: &DMatrix<f64>, labels: &[bool], c: f64, det: &LinearDetector) -> f64 {
    let hinge: f64 = det
        .decisions(features)
        .iter()
        .zip(labels)
        .map(|(s, &l)| (1.0 - if l { *s } else { -*s }).max(0.0))
        .sum();
    0.5 * (det.weights.norm_squared() + det.bias * det.bias) + c * hinge
}

pub fn train_svm(
    features: &DMatrix<f64>,
    labels: &[bool],
    c: f64,
    seed: u64,
    opts: &SvmOptions,
) -> Result<LinearDetector> {
    train(features, labels, c, seed, opts, None)
}

/// Like [`train_svm`], also returning the objective of the kept checkpoint
/// after every epoch.
pub fn train_svm_traced(
    features: &DMatrix<f64>,
    labels: &[bool],
    c: f64,
    seed: u64,
    opts: &SvmOptions,
) -> Result<(LinearDetector, Vec<f64>)> {
    let mut trace = Vec::new();
    let det = train(features, labels, c, seed, opts, Some(&mut trace))?;
    Ok((det, trace))
}

fn train(
    features: &DMatrix<f64>,
    labels: &[bool],
    c: f64,
    seed: u64,
    opts: &SvmOptions,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<LinearDetector> {
    let (m, d) = features.shape();
    if labels.len() != m {
        return Err(KdicaError::DimensionMismatch(format!("{m} samples but {} labels", labels.len())));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(KdicaError::InvalidConfig(format!("SVM C must be positive, got {c}")));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(KdicaError::DegenerateAttribute);
    }
    let rows: Vec<Vec<f64>> = features.row_iter().map(|r| r.iter().copied().collect()).collect();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let diag: Vec<f64> = rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0).collect();

    let mut alpha = vec![0.0; m];
    let mut w = vec![0.0; d];
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = substream(seed, Stream::Svm, 0);
    let mut epochs = 0;
    let mut best: Option<(f64, LinearDetector)> = None;

    for _ in 0..opts.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let xi = &rows[i];
            let margin = xi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + bias;
            let g = y[i] * margin - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                for (wk, xk) in w.iter_mut().zip(xi) {
                    *wk += step * xk;
                }
                bias += step;
            }
        }
        let current = LinearDetector { weights: DVector::from_column_slice(&w), bias, c, epochs };
        let value = svm_objective(features, labels, c, &current);
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, current));
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(best.as_ref().map(|(v, _)| *v).unwrap_or(value));
        }
        if pg_max - pg_min < opts.tolerance {
            break;
        }
    }
    let mut det = match best {
        Some((_, d)) => d,
        None => LinearDetector { weights: DVector::from_vec(w), bias, c, epochs },
    };
    det.epochs = epochs;
    Ok(det)
}
