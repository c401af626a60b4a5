//! Single-file model container.
//!
//! Layout: magic `KDMC`, `u32` format version, `u64` header length (both
//! little endian), a UTF-8 JSON header, then the matrices named in the
//! header's `blocks` list, each in `KDMX` encoding, in that order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::apps::{FeatureMap, FeaturePipeline};
use crate::classifiers::{AttributeDetector, DetectorBank, LinearDetector, PlattCalibrator};
use crate::data::kdmx;
use crate::error::{KdicaError, Result};
use crate::kdica::{KdicaConfig, KdicaModel};
use crate::kernels::CenteringStats;

pub const MAGIC: &[u8; 4] = b"KDMC";
pub const FORMAT_VERSION: u32 = 1;
pub const FORMAT_TAG: &str = "kdica-model";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelContainer {
    pub pipeline: FeaturePipeline,
    pub detectors: Option<DetectorBank>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectorMeta {
    c: f64,
    epochs: usize,
    bias: f64,
    calibrator: PlattCalibrator,
}

#[derive(Debug, Serialize, Deserialize)]
struct BankMeta {
    attribute_names: Vec<String>,
    fallback_probability: Vec<f64>,
    detectors: Vec<Option<DetectorMeta>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct KdicaMeta {
    config: KdicaConfig,
    epsilon: f64,
    grand_mean: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    normalize: bool,
    kdica: Option<KdicaMeta>,
    detectors: Option<BankMeta>,
    blocks: Vec<String>,
}

impl ModelContainer {
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| KdicaError::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| KdicaError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| KdicaError::io(path, e))?;
        Self::read_from(&mut BufReader::new(f))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut blocks: Vec<(&str, DMatrix<f64>)> = Vec::new();
        let kdica = self.pipeline.model().map(|m| {
            blocks.push(("projection", m.projection.clone()));
            blocks.push(("eigenvalues", DMatrix::from_column_slice(m.eigenvalues.len(), 1, m.eigenvalues.as_slice())));
            let cm = &m.centering.column_means;
            blocks.push(("column_means", DMatrix::from_column_slice(cm.len(), 1, cm.as_slice())));
            blocks.push(("train_features", m.train_features.clone()));
            KdicaMeta {
                config: m.config,
                epsilon: m.epsilon,
                grand_mean: m.centering.grand_mean,
            }
        });
        let detectors = self.detectors.as_ref().map(|bank| {
            let width = bank.detectors.iter().flatten().map(|d| d.detector.weights.len()).next().unwrap_or(0);
            let mut weights = DMatrix::zeros(bank.num_attributes(), width);
            for (a, d) in bank.detectors.iter().enumerate() {
                if let Some(d) = d {
                    weights.set_row(a, &d.detector.weights.transpose());
                }
            }
            blocks.push(("detector_weights", weights));
            BankMeta {
                attribute_names: bank.attribute_names.clone(),
                fallback_probability: bank.fallback_probability.clone(),
                detectors: bank
                    .detectors
                    .iter()
                    .map(|d| {
                        d.as_ref().map(|d| DetectorMeta {
                            c: d.detector.c,
                            epochs: d.detector.epochs,
                            bias: d.detector.bias,
                            calibrator: d.calibrator,
                        })
                    })
                    .collect(),
            }
        });
        let header = Header {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            normalize: self.pipeline.normalize,
            kdica,
            detectors,
            blocks: blocks.iter().map(|(n, _)| n.to_string()).collect(),
        };
        let json = serde_json::to_vec(&header).map_err(std::io::Error::other)?;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for (_, m) in &blocks {
            kdmx::write(w, m)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |m: &str| KdicaError::Format(m.to_string());
        let mut prefix = [0u8; 16];
        r.read_exact(&mut prefix).map_err(|_| bad("truncated header"))?;
        if &prefix[..4] != MAGIC {
            return Err(bad("missing KDMC magic bytes"));
        }
        let version = u32::from_le_bytes(prefix[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(KdicaError::Format(format!("unsupported container version {version}")));
        }
        let len = u64::from_le_bytes(prefix[8..16].try_into().unwrap());
        let len = usize::try_from(len).map_err(|_| bad("header too large"))?;
        let mut json = vec![0u8; len];
        r.read_exact(&mut json).map_err(|_| bad("truncated JSON header"))?;
        let header: Header = serde_json::from_slice(&json).map_err(|e| KdicaError::Format(e.to_string()))?;
        if header.format != FORMAT_TAG {
            return Err(KdicaError::Format(format!("unexpected format tag {:?}", header.format)));
        }
        let mut blocks = std::collections::BTreeMap::new();
        for name in &header.blocks {
            blocks.insert(name.clone(), kdmx::read(r, name)?);
        }
        let mut take = |name: &str| blocks.remove(name).ok_or_else(|| KdicaError::Format(format!("missing block {name}")));

        let map = match header.kdica {
            None => FeatureMap::Raw,
            Some(meta) => {
                let projection = take("projection")?;
                let eigenvalues = take("eigenvalues")?;
                let column_means = take("column_means")?;
                let train_features = take("train_features")?;
                let m = projection.nrows();
                if column_means.nrows() != m || train_features.nrows() != m || eigenvalues.nrows() != projection.ncols() {
                    return Err(bad("inconsistent model block shapes"));
                }
                FeatureMap::Kdica(KdicaModel {
                    config: meta.config,
                    epsilon: meta.epsilon,
                    eigenvalues: DVector::from_column_slice(eigenvalues.as_slice()),
                    centering: CenteringStats {
                        column_means: DVector::from_column_slice(column_means.as_slice()),
                        grand_mean: meta.grand_mean,
                    },
                    projection,
                    train_features,
                })
            }
        };
        let detectors = match header.detectors {
            None => None,
            Some(meta) => {
                let weights = take("detector_weights")?;
                if weights.nrows() != meta.detectors.len() {
                    return Err(bad("detector weight rows do not match detector count"));
                }
                let detectors = meta
                    .detectors
                    .into_iter()
                    .enumerate()
                    .map(|(a, d)| {
                        d.map(|d| AttributeDetector {
                            detector: LinearDetector {
                                weights: weights.row(a).transpose(),
                                bias: d.bias,
                                c: d.c,
                                epochs: d.epochs,
                            },
                            calibrator: d.calibrator,
                        })
                    })
                    .collect();
                Some(DetectorBank {
                    attribute_names: meta.attribute_names,
                    detectors,
                    fallback_probability: meta.fallback_probability,
                })
            }
        };
        Ok(ModelContainer {
            pipeline: FeaturePipeline {
                normalize: header.normalize,
                map,
            },
            detectors,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::{detect_attributes, DetectParams};
    use crate::synthetic::{generate, SynthSpec};

    #[test]
    fn roundtrip_preserves_outputs_bitwise() {
        let data = generate(&SynthSpec { samples_per_domain: 10, seed: 3, ..Default::default() }).unwrap();
        let mut params = DetectParams::default();
        params.representation.num_components = 8;
        let out = detect_attributes(&data.train, &data.test, &params).unwrap();
        let c = ModelContainer { pipeline: out.pipeline.clone(), detectors: Some(out.bank.clone()) };
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"KDMC");
        let back = ModelContainer::read_from(&mut &buf[..]).unwrap();
        assert_eq!(back, c);
        let x = back.pipeline.apply(data.test.features()).unwrap();
        assert_eq!(back.detectors.unwrap().probabilities(&x), out.probabilities);
    }

    #[test]
    fn rejects_garbage() {
        assert!(ModelContainer::read_from(&mut &b"KDMX0000000000000000"[..]).is_err());
        let mut buf = Vec::new();
        buf.extend_from_slice(b"KDMC");
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&0u64.to_le_bytes());
        assert!(ModelContainer::read_from(&mut &buf[..]).is_err());
    }
}
