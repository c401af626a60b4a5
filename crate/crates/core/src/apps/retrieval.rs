use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classifiers::auc;
use crate::error::{KdicaError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: Vec<usize>,
    /// Sample indices, best first; ties keep index order.
    pub ranking: Vec<usize>,
    pub scores: Vec<f64>,
    pub num_relevant: usize,
    /// `None` when every sample is relevant or none is.
    pub auc: Option<f64>,
}

/// Ranks samples by the summed probabilities of the queried attributes.
/// A sample is relevant iff it has every queried attribute.
pub fn retrieve(probabilities: &DMatrix<f64>, ground_truth: &DMatrix<f64>, query: &[usize]) -> Result<RetrievalResult> {
    if query.is_empty() {
        return Err(KdicaError::InvalidConfig("empty retrieval query".into()));
    }
    let a = probabilities.ncols();
    if let Some(&bad) = query.iter().find(|&&q| q >= a) {
        return Err(KdicaError::InvalidConfig(format!("query attribute {bad} out of range (A = {a})")));
    }
    if ground_truth.shape() != probabilities.shape() {
        return Err(KdicaError::DimensionMismatch(format!(
            "probabilities are {:?}, ground truth is {:?}",
            probabilities.shape(),
            ground_truth.shape()
        )));
    }
    let t = probabilities.nrows();
    let scores: Vec<f64> = (0..t).map(|s| query.iter().map(|&q| probabilities[(s, q)]).sum()).collect();
    let relevant: Vec<bool> = (0..t).map(|s| query.iter().all(|&q| ground_truth[(s, q)] == 1.0)).collect();
    let mut ranking: Vec<usize> = (0..t).collect();
    ranking.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    let auc = match auc(&scores, &relevant) {
        Ok(v) => Some(v),
        Err(KdicaError::UndefinedAuc(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(RetrievalResult {
        query: query.to_vec(),
        ranking,
        scores,
        num_relevant: relevant.iter().filter(|&&r| r).count(),
        auc,
    })
}
