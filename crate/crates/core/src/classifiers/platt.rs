//! Sigmoid calibration of decision scores.

use serde::{Deserialize, Serialize};

use crate::error::{KdicaError, Result};

/// `p(s) = 1 / (1 + exp(slope * s + intercept))` with `slope < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibrator {
    pub slope: f64,
    pub intercept: f64,
}

/// Largest slope allowed, so the calibrated probability stays increasing
/// in the score even when the fit would prefer a flat or inverted sigmoid.
pub const MAX_SLOPE: f64 = -1e-6;

impl PlattCalibrator {
    pub fn probability(&self, score: f64) -> f64 {
        let z = self.slope * score + self.intercept;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

/// Regularized maximum-likelihood sigmoid fit with Platt's smoothed targets,
/// solved by Newton's method with backtracking.
pub fn calibrate(scores: &[f64], labels: &[bool]) -> Result<PlattCalibrator> {
    if scores.len() != labels.len() {
        return Err(KdicaError::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(KdicaError::DegenerateAttribute);
    }
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();

    let init_b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let (a, b) = newton(scores, &targets, 0.0, init_b, true);
    if a <= MAX_SLOPE {
        return Ok(PlattCalibrator { slope: a, intercept: b });
    }
    let (a, b) = newton(scores, &targets, MAX_SLOPE, init_b, false);
    Ok(PlattCalibrator { slope: a, intercept: b })
}

fn objective(scores: &[f64], t: &[f64], a: f64, b: f64) -> f64 {
    scores
        .iter()
        .zip(t)
        .map(|(&s, &ti)| {
            let f = a * s + b;
            if f >= 0.0 {
                ti * f + (-f).exp().ln_1p()
            } else {
                (ti - 1.0) * f + f.exp().ln_1p()
            }
        })
        .sum()
}

/// Minimizes the cross-entropy over `(a, b)`, or over `b` alone when
/// `free_slope` is false.
fn newton(scores: &[f64], t: &[f64], a0: f64, b0: f64, free_slope: bool) -> (f64, f64) {
    const MAX_ITER: usize = 100;
    const MIN_STEP: f64 = 1e-10;
    const SIGMA: f64 = 1e-12;
    const EPS: f64 = 1e-5;

    let (mut a, mut b) = (a0, b0);
    let mut fval = objective(scores, t, a, b);
    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&s, &ti) in scores.iter().zip(t) {
            let f = a * s + b;
            let (p, q) = if f >= 0.0 {
                let e = (-f).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += s * s * d2;
            h22 += d2;
            h21 += s * d2;
            let d1 = ti - p;
            g1 += s * d1;
            g2 += d1;
        }
        if !free_slope {
            g1 = 0.0;
        }
        if g1.abs() < EPS && g2.abs() < EPS {
            break;
        }
        let (da, db) = if free_slope {
            let det = h11 * h22 - h21 * h21;
            (-(h22 * g1 - h21 * g2) / det, -(-h21 * g1 + h11 * g2) / det)
        } else {
            (0.0, -g2 / h22)
        };
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut moved = false;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(scores, t, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    (a, b)
}
