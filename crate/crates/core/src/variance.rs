//! Distributional variance of per-domain kernel mean embeddings.
//!
//! With equal weight per domain, `tr(K Q)` is the average squared RKHS
//! distance between each domain's empirical mean map and the mean of those
//! maps. `Q` only depends on the domain sizes.

use nalgebra::DMatrix;

use crate::error::{KdicaError, Result};
use crate::kernels::KernelMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    pub values: DMatrix<f64>,
    pub domain_counts: Vec<usize>,
}

/// `Q[m][m'] = [y_m = y_m'] / (C n_y^2) - 1 / (C^2 n_{y_m} n_{y_m'})`.
pub fn build_q(domain_labels: &[usize], num_domains: usize) -> Result<QMatrix> {
    let mut counts = vec![0usize; num_domains];
    for &y in domain_labels {
        if y >= num_domains {
            return Err(KdicaError::DimensionMismatch(format!(
                "domain label {y} out of range for {num_domains} domains"
            )));
        }
        counts[y] += 1;
    }
    if let Some(y) = counts.iter().position(|&n| n == 0) {
        return Err(KdicaError::EmptyDomain(format!("domain {y} has no samples")));
    }
    let m = domain_labels.len();
    let c = num_domains as f64;
    let values = if num_domains == 1 {
        DMatrix::zeros(m, m)
    } else {
        DMatrix::from_fn(m, m, |i, j| {
            let (yi, yj) = (domain_labels[i], domain_labels[j]);
            let (ni, nj) = (counts[yi] as f64, counts[yj] as f64);
            let within = if yi == yj { 1.0 / (c * ni * ni) } else { 0.0 };
            within - 1.0 / (c * c * ni * nj)
        })
    };
    Ok(QMatrix {
        values,
        domain_counts: counts,
    })
}

/// `tr(K Q)`, clamped at zero.
pub fn distributional_variance(k: &KernelMatrix, q: &QMatrix) -> Result<f64> {
    if k.values.shape() != q.values.shape() {
        return Err(KdicaError::DimensionMismatch(format!(
            "kernel is {:?}, Q is {:?}",
            k.values.shape(),
            q.values.shape()
        )));
    }
    // tr(KQ) = sum_ij K_ij Q_ji, and Q is symmetric.
    let tr = k.values.component_mul(&q.values).sum();
    Ok(tr.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{center_train, gram, KernelSpec};
    use crate::testutil::{feature_space_variance, jacobi_eigenvalues, random_matrix};
    use proptest::prelude::*;

    #[test]
    fn single_domain_is_zero() {
        let q = build_q(&[0, 0, 0], 1).unwrap();
        assert_eq!(q.values, DMatrix::zeros(3, 3));
        let x = random_matrix(3, 2, 1);
        let k = center_train(&gram(&x, &KernelSpec::rbf(1.0)).unwrap());
        assert_eq!(distributional_variance(&k, &q).unwrap(), 0.0);
    }

    #[test]
    fn two_singletons() {
        let q = build_q(&[0, 1], 2).unwrap();
        assert_eq!(q.values, DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]));
    }

    #[test]
    fn rows_sum_to_zero_and_psd() {
        let q = build_q(&[0, 0, 1, 1, 1, 2], 3).unwrap();
        for r in q.values.row_iter() {
            assert!(r.sum().abs() <= 1e-12);
        }
        let min = jacobi_eigenvalues(&q.values).into_iter().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10);
    }

    #[test]
    fn errors() {
        assert!(matches!(build_q(&[0, 2], 3), Err(KdicaError::EmptyDomain(_))));
        let q = build_q(&[0, 1], 2).unwrap();
        let x = random_matrix(3, 1, 0);
        let k = gram(&x, &KernelSpec::linear()).unwrap();
        assert!(distributional_variance(&k, &q).is_err());
    }

    #[test]
    fn duplicated_domains_have_zero_variance() {
        let half = random_matrix(5, 3, 4);
        let x = DMatrix::from_fn(10, 3, |i, j| half[(i % 5, j)]);
        let labels: Vec<usize> = (0..10).map(|i| i / 5).collect();
        let q = build_q(&labels, 2).unwrap();
        for spec in [KernelSpec::linear(), KernelSpec::rbf(1.0)] {
            let k = center_train(&gram(&x, &spec).unwrap());
            assert!(distributional_variance(&k, &q).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn translating_a_domain_increases_variance() {
        let x = random_matrix(12, 3, 8);
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let q = build_q(&labels, 3).unwrap();
        let var = |x: &DMatrix<f64>| {
            distributional_variance(&center_train(&gram(x, &KernelSpec::linear()).unwrap()), &q).unwrap()
        };
        let mut prev = var(&x);
        for step in 1..5 {
            let mut moved = x.clone();
            for i in (0..12).filter(|i| labels[*i] == 0) {
                moved[(i, 0)] += step as f64;
            }
            let v = var(&moved);
            assert!(v > prev);
            prev = v;
        }
    }

    proptest! {
        #[test]
        fn matches_feature_space_oracle(m in 2usize..30, c in 1usize..6, d in 1usize..5, seed in any::<u64>()) {
            prop_assume!(c <= m);
            let x = random_matrix(m, d, seed);
            let labels: Vec<usize> = (0..m).map(|i| i % c).collect();
            let q = build_q(&labels, c).unwrap();
            let k = center_train(&gram(&x, &KernelSpec::linear()).unwrap());
            let got = distributional_variance(&k, &q).unwrap();
            let want = feature_space_variance(&x, &labels, c);
            prop_assert!((got - want).abs() <= 1e-10, "{} vs {}", got, want);
        }

        #[test]
        fn permutation_invariant(seed in any::<u64>(), shift in 1usize..11) {
            let x = random_matrix(11, 2, seed);
            let labels: Vec<usize> = (0..11).map(|i| (i * 7) % 3).collect();
            let perm: Vec<usize> = (0..11).map(|i| (i + shift) % 11).collect();
            let xp = x.select_rows(&perm);
            let lp: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
            let spec = KernelSpec::rbf(1.0);
            let a = distributional_variance(&center_train(&gram(&x, &spec).unwrap()), &build_q(&labels, 3).unwrap()).unwrap();
            let b = distributional_variance(&center_train(&gram(&xp, &spec).unwrap()), &build_q(&lp, 3).unwrap()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
