use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{kdmx, AttributeSource, ClassSignatures, Dataset, SourceNames};
use crate::error::{KdicaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    #[default]
    Csv,
    Kdmx,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::Kdmx => "kdmx",
        }
    }

    /// Guesses from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("kdmx") => MatrixFormat::Kdmx,
            _ => MatrixFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeLevel {
    Sample,
    Class,
}

/// On-disk dataset description. Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub features: PathBuf,
    pub labels: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_signatures: Option<PathBuf>,
    /// Original class id of each signature row; defaults to the row index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature_ids: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_names: Option<PathBuf>,
    /// Which annotation to train from when both are present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_level: Option<AttributeLevel>,
    #[serde(default)]
    pub format: MatrixFormat,
}

pub fn read_matrix(path: &Path, format: MatrixFormat) -> Result<DMatrix<f64>> {
    let name = path.display().to_string();
    match format {
        MatrixFormat::Kdmx => {
            let f = File::open(path).map_err(|e| KdicaError::io(path, e))?;
            kdmx::read(&mut BufReader::new(f), &name)
        }
        MatrixFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_path(path)
                .map_err(|e| KdicaError::parse(&name, e.to_string()))?;
            let mut values = Vec::new();
            let mut cols = None;
            let mut rows = 0;
            for (r, rec) in rdr.records().enumerate() {
                let rec = rec.map_err(|e| KdicaError::parse(&name, e.to_string()))?;
                if rec.len() == 1 && rec[0].is_empty() {
                    continue;
                }
                match cols {
                    None => cols = Some(rec.len()),
                    Some(c) if c != rec.len() => {
                        return Err(KdicaError::DimensionMismatch(format!(
                            "{name}: row {r} has {} columns, expected {c}",
                            rec.len()
                        )))
                    }
                    _ => {}
                }
                for (c, field) in rec.iter().enumerate() {
                    let v: f64 = field.parse().map_err(|_| {
                        KdicaError::parse(&name, format!("row {r}, column {c}: bad number {field:?}"))
                    })?;
                    values.push(v);
                }
                rows += 1;
            }
            Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &values))
        }
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>, format: MatrixFormat) -> Result<()> {
    let f = File::create(path).map_err(|e| KdicaError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let res = match format {
        MatrixFormat::Kdmx => kdmx::write(&mut w, m),
        MatrixFormat::Csv => {
            let mut out = Ok(());
            for row in m.row_iter() {
                let line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
                out = writeln!(w, "{line}");
                if out.is_err() {
                    break;
                }
            }
            out
        }
    };
    res.and_then(|_| w.flush()).map_err(|e| KdicaError::io(path, e))
}

/// One integer per line; blank lines are ignored.
pub fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let f = File::open(path).map_err(|e| KdicaError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| KdicaError::io(path, e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse().map_err(|_| {
            KdicaError::parse(path.display().to_string(), format!("line {}: bad label {t:?}", i + 1))
        })?);
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &[i64]) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 4);
    for l in labels {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| KdicaError::io(path, e))
}

fn read_names(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| KdicaError::io(path, e))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(manifest_path).map_err(|e| KdicaError::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| KdicaError::parse(manifest_path.display().to_string(), e.to_string()))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| base.join(p);
    let fmt = manifest.format;

    let features_path = resolve(&manifest.features);
    let features = read_matrix(&features_path, fmt)?;
    let labels = read_labels(&resolve(&manifest.labels))?;

    let signatures = match &manifest.class_signatures {
        Some(p) => {
            let values = read_matrix(&resolve(p), fmt)?;
            let ids = match &manifest.signature_ids {
                Some(ip) => read_labels(&resolve(ip))?,
                None => (0..values.nrows() as i64).collect(),
            };
            Some(ClassSignatures { ids, values })
        }
        None => None,
    };

    let level = manifest.attribute_level.unwrap_or(if manifest.attributes.is_some() {
        AttributeLevel::Sample
    } else {
        AttributeLevel::Class
    });
    let attributes = match (level, &manifest.attributes) {
        (AttributeLevel::Sample, Some(p)) => AttributeSource::PerSample(read_matrix(&resolve(p), fmt)?),
        (AttributeLevel::Sample, None) => {
            return Err(KdicaError::InvalidConfig(format!(
                "{}: attribute_level is \"sample\" but no attributes file is given",
                manifest_path.display()
            )))
        }
        (AttributeLevel::Class, _) => AttributeSource::FromSignatures,
    };
    let names = manifest.attribute_names.as_ref().map(|p| read_names(&resolve(p))).transpose()?;

    let display = |p: &Option<PathBuf>| p.as_ref().map(|p| resolve(p).display().to_string()).unwrap_or_default();
    let source = SourceNames {
        features: features_path.display().to_string(),
        labels: resolve(&manifest.labels).display().to_string(),
        attributes: display(&manifest.attributes),
        signatures: display(&manifest.class_signatures),
    };
    Dataset::new_named(features, &labels, attributes, names, signatures, &source)
}

/// Writes `manifest.json` plus data files into `dir`, returning the manifest path.
pub fn save_dataset(ds: &Dataset, dir: &Path, format: MatrixFormat) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| KdicaError::io(dir, e))?;
    let ext = format.extension();
    let features = PathBuf::from(format!("features.{ext}"));
    let attributes = PathBuf::from(format!("attributes.{ext}"));
    write_matrix(&dir.join(&features), ds.features(), format)?;
    write_labels(&dir.join("labels.txt"), &ds.original_labels())?;
    write_matrix(&dir.join(&attributes), ds.attributes(), format)?;
    fs::write(dir.join("attribute_names.txt"), ds.attribute_names().join("\n") + "\n")
        .map_err(|e| KdicaError::io(dir, e))?;

    let mut manifest = Manifest {
        features,
        labels: "labels.txt".into(),
        attributes: Some(attributes),
        class_signatures: None,
        signature_ids: None,
        attribute_names: Some("attribute_names.txt".into()),
        attribute_level: None,
        format,
    };
    if let Some(sig) = ds.class_signatures() {
        let sig_path = PathBuf::from(format!("class_signatures.{ext}"));
        write_matrix(&dir.join(&sig_path), sig, format)?;
        write_labels(&dir.join("signature_ids.txt"), ds.class_ids())?;
        manifest.class_signatures = Some(sig_path);
        manifest.signature_ids = Some("signature_ids.txt".into());
    }
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| KdicaError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn loads_csv_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        write(d, "x.csv", "1,2,3\n4,5,6\n7,8,9\n0,0,0\n");
        write(d, "y.txt", "5\n9\n9\n5\n");
        write(d, "a.csv", "1,0\n0,1\n1,1\n0,0\n");
        write(d, "m.json", r#"{"features":"x.csv","labels":"y.txt","attributes":"a.csv","format":"csv"}"#);
        let ds = load_dataset(&d.join("m.json")).unwrap();
        assert_eq!((ds.num_samples(), ds.dim(), ds.num_attributes(), ds.num_domains()), (4, 3, 2, 2));
        assert_eq!(ds.domain_labels(), &[0, 1, 1, 0]);
    }

    #[test]
    fn non_binary_error_names_file() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        write(d, "x.csv", "1,2,3\n4,5,6\n7,8,9\n0,0,0\n");
        write(d, "y.txt", "0\n0\n1\n1\n");
        write(d, "a.csv", "1,0\n0,1\n2,1\n0,0\n");
        write(d, "m.json", r#"{"features":"x.csv","labels":"y.txt","attributes":"a.csv","format":"csv"}"#);
        let err = load_dataset(&d.join("m.json")).unwrap_err().to_string();
        assert!(err.contains("non-binary attribute"), "{err}");
        assert!(err.contains("a.csv") && err.contains("row 2"), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        write(d, "x.csv", "1,2\n3,4\n");
        write(d, "y.txt", "0\n0\n1\n");
        write(d, "a.csv", "1\n0\n");
        write(d, "m.json", r#"{"features":"x.csv","labels":"y.txt","attributes":"a.csv"}"#);
        assert!(matches!(load_dataset(&d.join("m.json")), Err(KdicaError::DimensionMismatch(_))));
    }

    #[test]
    fn missing_manifest_is_io_error() {
        assert!(matches!(load_dataset(Path::new("/nonexistent/m.json")), Err(KdicaError::Io { .. })));
    }

    #[test]
    fn class_level_attributes_from_signatures() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        write(d, "x.csv", "1\n2\n3\n");
        write(d, "y.txt", "1\n2\n1\n");
        write(d, "s.csv", "0,0\n1,0\n0,1\n");
        write(d, "m.json", r#"{"features":"x.csv","labels":"y.txt","class_signatures":"s.csv"}"#);
        let ds = load_dataset(&d.join("m.json")).unwrap();
        assert_eq!(ds.attributes(), &DMatrix::from_row_slice(3, 2, &[1., 0., 0., 1., 1., 0.]));
    }

    #[test]
    fn save_load_roundtrip_is_bit_identical() {
        let x = DMatrix::from_row_slice(3, 2, &[0.1, 1.0 / 3.0, -2e-300, 7.5, f64::MAX, 1e-7]);
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 1.0]);
        let sig = ClassSignatures { ids: vec![4, 8], values: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]) };
        let ds = Dataset::new(x, &[4, 8, 4], AttributeSource::PerSample(a), None, Some(sig)).unwrap();
        for fmt in [MatrixFormat::Csv, MatrixFormat::Kdmx] {
            let dir = tempfile::tempdir().unwrap();
            let m = save_dataset(&ds, dir.path(), fmt).unwrap();
            let back = load_dataset(&m).unwrap();
            assert_eq!(back, ds);
            for (p, q) in back.features().iter().zip(ds.features().iter()) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
    }
}
