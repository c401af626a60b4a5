//! JSON and CSV report emission.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{CvReport, DetectionReport, RetrievalResult, ZeroShotAccuracy};
use crate::error::{KdicaError, Result};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| KdicaError::Format(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| KdicaError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| KdicaError::io(path, e))
}

/// Per-attribute AUC table with a closing mean row.
pub fn detection_csv(report: &DetectionReport) -> String {
    let mut s = String::from("index,attribute,auc,status\n");
    for a in &report.attributes {
        let status = serde_json::to_value(a.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        s.push_str(&format!("{},{},{},{}\n", a.index, a.name, opt(a.auc), status));
    }
    s.push_str(&format!(",mean,{},\n", opt(report.mean_auc)));
    s
}

pub fn zero_shot_csv(acc: &ZeroShotAccuracy) -> String {
    let mut s = String::from("class,accuracy\n");
    for (id, a) in acc.class_ids.iter().zip(&acc.per_class) {
        s.push_str(&format!("{id},{}\n", opt(*a)));
    }
    s.push_str(&format!("mean,{}\n", acc.mean_per_class));
    s
}

/// One row per query, grouped by query size.
pub fn retrieval_csv(results: &[RetrievalResult]) -> String {
    let mut s = String::from("query,size,relevant,auc\n");
    for r in results {
        let q: Vec<String> = r.query.iter().map(|i| i.to_string()).collect();
        s.push_str(&format!("{},{},{},{}\n", q.join("+"), r.query.len(), r.num_relevant, opt(r.auc)));
    }
    let mut sizes: Vec<usize> = results.iter().map(|r| r.query.len()).collect();
    sizes.sort_unstable();
    sizes.dedup();
    for size in sizes {
        let v: Vec<f64> = results.iter().filter(|r| r.query.len() == size).filter_map(|r| r.auc).collect();
        let mean = (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        s.push_str(&format!("mean,{size},,{}\n", opt(mean)));
    }
    s
}

pub fn cv_csv(report: &CvReport) -> String {
    let mut s = String::from("stage,c,b,gamma,mean_auc\n");
    for c in &report.cells {
        let stage = match c.stage {
            super::CvStage::Components => "components",
            super::CvStage::Alignment => "alignment",
        };
        s.push_str(&format!(
            "{stage},{},{},{},{}\n",
            c.params.c,
            c.params.b.map(|b| b.to_string()).unwrap_or_default(),
            opt(c.params.gamma),
            opt(c.mean_auc)
        ));
    }
    s
}
