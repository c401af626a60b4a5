//! Reference computations used only by tests. Each one takes the slow,
//! obvious route so it can check the library's faster path.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns the
/// eigenvalues (unsorted) and the eigenvectors as columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    jacobi_eigen(a).0
}

/// AUC by counting every positive/negative pair; ties count one half.
pub fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut good = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                good += 1.0;
            } else if si == sj {
                good += 0.5;
            }
        }
    }
    good / pairs
}

/// `(1/C) sum_y |mean_y - mean of means|^2` computed on explicit feature vectors.
pub fn feature_space_variance(x: &DMatrix<f64>, labels: &[usize], num_domains: usize) -> f64 {
    let d = x.ncols();
    let mut means = vec![vec![0.0; d]; num_domains];
    let mut counts = vec![0usize; num_domains];
    for (i, &y) in labels.iter().enumerate() {
        counts[y] += 1;
        for k in 0..d {
            means[y][k] += x[(i, k)];
        }
    }
    for y in 0..num_domains {
        for k in 0..d {
            means[y][k] /= counts[y] as f64;
        }
    }
    let grand: Vec<f64> = (0..d)
        .map(|k| means.iter().map(|m| m[k]).sum::<f64>() / num_domains as f64)
        .collect();
    means
        .iter()
        .map(|m| m.iter().zip(&grand).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum::<f64>()
        / num_domains as f64
}
