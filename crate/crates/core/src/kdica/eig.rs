//! Symmetric-definite generalized eigenproblem `A v = lambda R v`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{KdicaError, Result};

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Nonincreasing.
    pub values: DVector<f64>,
    /// One eigenvector per column, `V^T R V = I`.
    pub vectors: DMatrix<f64>,
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// The `count` largest eigenpairs of the pencil `(a, r)`.
///
/// Reduces to a standard symmetric problem through the Cholesky factor
/// `r = G G^T`: eigenvectors `u` of `G^-1 a G^-T` map back as `v = G^-T u`.
/// `epsilon` is only used to word the error when `r` is not positive definite.
pub fn generalized_symmetric_eig(
    a: &DMatrix<f64>,
    r: &DMatrix<f64>,
    count: usize,
    epsilon: f64,
) -> Result<EigenPairs> {
    let n = a.nrows();
    if a.shape() != (n, n) || r.shape() != (n, n) {
        return Err(KdicaError::DimensionMismatch(format!(
            "pencil matrices are {:?} and {:?}",
            a.shape(),
            r.shape()
        )));
    }
    if count == 0 || count > n {
        return Err(KdicaError::InvalidConfig(format!(
            "requested {count} eigenpairs of a {n}x{n} pencil"
        )));
    }
    let chol = r.clone().cholesky().ok_or(KdicaError::NotPositiveDefinite { epsilon })?;
    let g = chol.l();
    if g.diagonal().iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(KdicaError::NotPositiveDefinite { epsilon });
    }

    // G^-1 A G^-T
    let x = g
        .solve_lower_triangular(a)
        .ok_or(KdicaError::NotPositiveDefinite { epsilon })?;
    let c = g
        .solve_lower_triangular(&x.transpose())
        .ok_or(KdicaError::NotPositiveDefinite { epsilon })?;
    let c = symmetrize(&c);

    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let top = &order[..count];

    let values = DVector::from_iterator(count, top.iter().map(|&i| eig.eigenvalues[i]));
    let u = eig.eigenvectors.select_columns(top);
    let mut vectors = g
        .tr_solve_lower_triangular(&u)
        .ok_or(KdicaError::NotPositiveDefinite { epsilon })?;
    fix_signs(&mut vectors);
    Ok(EigenPairs { values, vectors })
}

/// Flips each column so its largest-magnitude entry (first on ties) is positive.
pub fn fix_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if !col.is_empty() && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Worst-case violations of the eigenpair contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilDiagnostics {
    /// `max_i |A v_i - l_i R v_i| / (|A|_F + l_i |R|_F)`
    pub relative_residual: f64,
    /// `max |V^T R V - I|`, entrywise.
    pub orthonormality_error: f64,
}

pub fn pencil_diagnostics(a: &DMatrix<f64>, r: &DMatrix<f64>, pairs: &EigenPairs) -> PencilDiagnostics {
    let (na, nr) = (a.norm(), r.norm());
    let av = a * &pairs.vectors;
    let rv = r * &pairs.vectors;
    let relative_residual = (0..pairs.values.len())
        .map(|i| {
            let l = pairs.values[i];
            let res = (av.column(i) - rv.column(i) * l).norm();
            res / (na + l.abs() * nr)
        })
        .fold(0.0, f64::max);
    let gram = pairs.vectors.transpose() * rv;
    let k = gram.nrows();
    let orthonormality_error = (gram - DMatrix::identity(k, k)).amax();
    PencilDiagnostics {
        relative_residual,
        orthonormality_error,
    }
}
