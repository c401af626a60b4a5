//! Command-line interface.
//!
//! Every command writes its reports plus a `run.json` holding the fully
//! resolved command, so `kdica replay <dir>/run.json` reproduces the reports
//! bit for bit. Exit codes: 0 success, 2 invalid input or configuration,
//! 3 numerical failure, 4 too many attributes skipped.

mod args;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::apps::report::{cv_csv, detection_csv, retrieval_csv, write_json, write_text, zero_shot_csv};
use crate::apps::{
    cross_validate, dap_zero_shot, detect_attributes, fit_representation, retrieve, zero_shot_accuracy, DetectParams,
    DetectionOutcome, RetrievalResult, ZeroShotAccuracy, ZeroShotTable,
};
use crate::classifiers::auc;
use crate::container::{ModelContainer, FORMAT_VERSION as MODEL_VERSION};
use crate::data::{load_dataset, read_matrix, save_dataset, write_matrix, MatrixFormat};
use crate::data::{kdmx, split_by_classes, Dataset, SplitSpec};
use crate::error::{KdicaError, Result};
use crate::synthetic::generate;

pub use args::*;

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_SKIPPED: i32 = 4;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub kdmx_version: u32,
    pub model_version: u32,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug)]
enum Failure {
    Error(KdicaError),
    Skipped { ratio: f64, limit: f64 },
}

impl From<KdicaError> for Failure {
    fn from(e: KdicaError) -> Self {
        Failure::Error(e)
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(Failure::Error(KdicaError::InvalidConfig(format!("thread pool: {e}")))),
        },
        None => execute(cli.command),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            }
        }
        Err(Failure::Skipped { ratio, limit }) => {
            eprintln!("error: {:.1}% of attributes were skipped (limit {:.1}%)", ratio * 100.0, limit * 100.0);
            EXIT_SKIPPED
        }
    }
}

fn execute(command: Command) -> std::result::Result<(), Failure> {
    let command = match command {
        Command::Replay(r) => replay(&r)?,
        c => resolve(c)?,
    };
    match &command {
        Command::Fit(a) => cmd_fit(a, &command),
        Command::Transform(a) => cmd_transform(a, &command),
        Command::Detect(a) => cmd_detect(a, &command),
        Command::Zeroshot(a) => cmd_zeroshot(a, &command),
        Command::Retrieve(a) => cmd_retrieve(a, &command),
        Command::Eval(a) => cmd_eval(a, &command),
        Command::Synth(a) => cmd_synth(a, &command),
        Command::Cv(a) => cmd_cv(a, &command),
        Command::Replay(_) => Err(KdicaError::InvalidConfig("a run.json cannot record a replay".into()).into()),
    }
}

fn replay(r: &ReplayArgs) -> Result<Command> {
    let text = fs::read_to_string(&r.run).map_err(|e| KdicaError::io(&r.run, e))?;
    let record: RunRecord =
        serde_json::from_str(&text).map_err(|e| KdicaError::parse(r.run.display().to_string(), e.to_string()))?;
    if record.kdmx_version != kdmx::VERSION || record.model_version != MODEL_VERSION {
        return Err(KdicaError::InvalidConfig(format!(
            "{} was written with format versions {}/{}, this build reads {}/{}",
            r.run.display(),
            record.kdmx_version,
            record.model_version,
            kdmx::VERSION,
            MODEL_VERSION
        )));
    }
    let mut command = record.command;
    if let Some(out) = &r.out {
        if let Some(o) = output_mut(&mut command) {
            o.out = out.clone();
        }
    }
    Ok(command)
}

fn absolute(p: &Path) -> Result<PathBuf> {
    fs::canonicalize(p).map_err(|e| KdicaError::io(p, e))
}

fn absolute_opt(p: &mut Option<PathBuf>) -> Result<()> {
    if let Some(v) = p {
        *v = absolute(v)?;
    }
    Ok(())
}

fn resolve_data(d: &mut DataArgs) -> Result<()> {
    absolute_opt(&mut d.train)?;
    absolute_opt(&mut d.test)?;
    absolute_opt(&mut d.data)
}

/// Makes input paths absolute so the recorded command runs from anywhere.
fn resolve(mut command: Command) -> Result<Command> {
    match &mut command {
        Command::Fit(a) => a.train = absolute(&a.train)?,
        Command::Transform(a) => {
            a.model = absolute(&a.model)?;
            a.input = absolute(&a.input)?;
        }
        Command::Detect(a) => resolve_data(&mut a.data)?,
        Command::Zeroshot(a) => resolve_data(&mut a.detect.data)?,
        Command::Retrieve(a) => resolve_data(&mut a.detect.data)?,
        Command::Eval(a) => {
            a.scores = absolute(&a.scores)?;
            a.labels = absolute(&a.labels)?;
        }
        Command::Cv(a) => a.train = absolute(&a.train)?,
        Command::Synth(_) | Command::Replay(_) => {}
    }
    Ok(command)
}

fn output_mut(command: &mut Command) -> Option<&mut OutputArgs> {
    Some(match command {
        Command::Fit(a) => &mut a.output,
        Command::Transform(a) => &mut a.output,
        Command::Detect(a) => &mut a.output,
        Command::Zeroshot(a) => &mut a.detect.output,
        Command::Retrieve(a) => &mut a.detect.output,
        Command::Eval(a) => &mut a.output,
        Command::Synth(a) => &mut a.output,
        Command::Cv(a) => &mut a.output,
        Command::Replay(_) => return None,
    })
}

fn prepare_output(out: &OutputArgs, command: &Command) -> Result<PathBuf> {
    fs::create_dir_all(&out.out).map_err(|e| KdicaError::io(&out.out, e))?;
    let record = RunRecord {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kdmx_version: kdmx::VERSION,
        model_version: MODEL_VERSION,
        command: command.clone(),
    };
    write_json(&out.out.join("run.json"), &record)?;
    Ok(out.out.clone())
}

fn load_split(d: &DataArgs, seed: u64) -> Result<(Dataset, Dataset)> {
    if let Some(data) = &d.data {
        let ds = load_dataset(data)?;
        let spec = if !d.test_classes.is_empty() {
            let test: std::collections::BTreeSet<i64> = d.test_classes.iter().copied().collect();
            SplitSpec {
                train_classes: ds.class_ids().iter().copied().filter(|c| !test.contains(c)).collect(),
                test_classes: test,
                seed,
            }
        } else {
            let n = d.num_test_classes.ok_or_else(|| {
                KdicaError::InvalidConfig("--data needs --test-classes or --num-test-classes".into())
            })?;
            SplitSpec::random(ds.class_ids(), n, seed)?
        };
        return split_by_classes(&ds, &spec);
    }
    match (&d.train, &d.test) {
        (Some(train), Some(test)) => Ok((load_dataset(train)?, load_dataset(test)?)),
        _ => Err(KdicaError::InvalidConfig("give --train and --test, or --data".into())),
    }
}

fn spectrum_summary(values: &[f64]) -> String {
    let shown: Vec<String> = values.iter().take(10).map(|v| format!("{v:.6e}")).collect();
    let more = if values.len() > 10 { format!(" ... ({} total)", values.len()) } else { String::new() };
    format!("eigenvalues: {}{more}", shown.join(" "))
}

fn cmd_fit(a: &FitArgs, command: &Command) -> std::result::Result<(), Failure> {
    let out = prepare_output(&a.output, command)?;
    let train = load_dataset(&a.train)?;
    let mut warnings = Vec::new();
    let pipeline = fit_representation(&train, &a.representation.config(), &mut warnings)?;
    if let Some(model) = pipeline.model() {
        println!("{}", spectrum_summary(model.eigenvalues.as_slice()));
    }
    ModelContainer { pipeline, detectors: None }.save(&out.join("model.kdmc"))?;
    write_json(&out.join("warnings.json"), &warnings)?;
    Ok(())
}

fn cmd_transform(a: &TransformArgs, command: &Command) -> std::result::Result<(), Failure> {
    let out = prepare_output(&a.output, command)?;
    let container = ModelContainer::load(&a.model)?;
    let features = if a.input.extension().and_then(|e| e.to_str()) == Some("json") {
        load_dataset(&a.input)?.features().clone()
    } else {
        read_matrix(&a.input, MatrixFormat::from_path(&a.input))?
    };
    let mapped = container.pipeline.apply(&features)?;
    let format: MatrixFormat = a.format.into();
    write_matrix(&out.join(format!("features.{}", format.extension())), &mapped, format)?;
    Ok(())
}

fn detect_params(a: &DetectArgs) -> DetectParams {
    DetectParams {
        representation: a.representation.config(),
        detector: a.detector.config(),
        seed: a.output.seed,
    }
}

fn run_detection(a: &DetectArgs, out: &Path) -> std::result::Result<(Dataset, Dataset, DetectionOutcome), Failure> {
    let (train, test) = load_split(&a.data, a.output.seed)?;
    let outcome = detect_attributes(&train, &test, &detect_params(a))?;
    write_json(&out.join("detection.json"), &outcome.report)?;
    write_text(&out.join("detection.csv"), &detection_csv(&outcome.report))?;
    write_matrix(&out.join("probabilities.csv"), &outcome.probabilities, MatrixFormat::Csv)?;
    ModelContainer {
        pipeline: outcome.pipeline.clone(),
        detectors: Some(outcome.bank.clone()),
    }
    .save(&out.join("model.kdmc"))?;
    if let Some(m) = outcome.report.mean_auc {
        println!("mean AUC over {} attributes: {m:.4}", outcome.report.attributes.len());
    }
    let ratio = outcome.report.skipped_ratio();
    if ratio > a.detector.max_skip_ratio {
        return Err(Failure::Skipped {
            ratio,
            limit: a.detector.max_skip_ratio,
        });
    }
    Ok((train, test, outcome))
}

fn cmd_detect(a: &DetectArgs, command: &Command) -> std::result::Result<(), Failure> {
    let out = prepare_output(&a.output, command)?;
    run_detection(a, &out)?;
    Ok(())
}

#[derive(Serialize)]
struct ZeroShotReport {
    priors: PriorArg,
    accuracy: ZeroShotAccuracy,
    indistinguishable: Vec<Vec<i64>>,
    warnings: Vec<String>,
}

fn cmd_zeroshot(a: &ZeroshotArgs, command: &Command) -> std::result::Result<(), Failure> {
    let out = prepare_output(&a.detect.output, command)?;
    let (_, test, outcome) = run_detection(&a.detect, &out)?;
    let table = ZeroShotTable::from_dataset(&test, a.priors.into())?;
    let mut warnings = outcome.report.warnings.clone();
    let dups = table.duplicate_signatures();
    for g in &dups {
        let msg = format!("classes {g:?} share one signature and cannot be told apart");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let pred = dap_zero_shot(&outcome.probabilities, &table)?;
    let accuracy = zero_shot_accuracy(&pred, test.domain_labels(), &table)?;
    println!("zero-shot mean per-class accuracy: {:.4}", accuracy.mean_per_class);

    let mut rows = String::from("sample,true_class,predicted_class\n");
    for (i, (&t, &p)) in test.domain_labels().iter().zip(&pred.predictions).enumerate() {
        rows.push_str(&format!("{i},{},{}\n", table.class_ids[t], table.class_ids[p]));
    }
    write_text(&out.join("predictions.csv"), &rows)?;
    write_text(&out.join("zeroshot.csv"), &zero_shot_csv(&accuracy))?;
    write_json(
        &out.join("zeroshot.json"),
        &ZeroShotReport {
            priors: a.priors,
            accuracy,
            indistinguishable: dups,
            warnings,
        },
    )?;
    Ok(())
}

fn parse_query(q: &str, names: &[String]) -> Result<Vec<usize>> {
    q.split(',')
        .map(|t| {
            let t = t.trim();
            names
                .iter()
                .position(|n| n == t)
                .or_else(|| t.parse::<usize>().ok().filter(|&i| i < names.len()))
                .ok_or_else(|| KdicaError::InvalidConfig(format!("unknown attribute {t:?} in query {q:?}")))
        })
        .collect()
}

fn all_queries(attrs: &[usize], max_size: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = attrs.iter().map(|&a| vec![a]).collect();
    let mut frontier = out.clone();
    for _ in 1..max_size {
        let mut next = Vec::new();
        for q in &frontier {
            let last = *q.last().unwrap_or(&0);
            for &a in attrs.iter().filter(|&&a| a > last) {
                let mut n = q.clone();
                n.push(a);
                next.push(n);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[derive(Serialize)]
struct RetrievalReport {
    queries: Vec<RetrievalResult>,
    warnings: Vec<String>,
}

fn cmd_retrieve(a: &RetrieveArgs, command: &Command) -> std::result::Result<(), Failure> {
    let out = prepare_output(&a.detect.output, command)?;
    let (_, test, outcome) = run_detection(&a.detect, &out)?;
    let queries = if a.queries.is_empty() {
        let trained: Vec<usize> = (0..outcome.bank.num_attributes())
            .filter(|&i| outcome.bank.detectors[i].is_some())
            .collect();
        all_queries(&trained, a.max_query_size.max(1))
    } else {
        a.queries
            .iter()
            .map(|q| parse_query(q, test.attribute_names()))
            .collect::<Result<_>>()?
    };
    let results = queries
        .iter()
        .map(|q| retrieve(&outcome.probabilities, test.attributes(), q))
        .collect::<Result<Vec<_>>>()?;
    write_text(&out.join("retrieval.csv"), &retrieval_csv(&results))?;
    write_json(
        &out.join("retrieval.json"),
        &RetrievalReport {
            queries: results,
            warnings: outcome.report.warnings.clone(),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    auc: Vec<Option<f64>>,
    mean_auc: Option<f64>,
}

fn cmd_eval(a: &EvalArgs, command: &Command) -> std::result::Result<(), Failure> {
    let out = prepare_output(&a.output, command)?;
    let scores = read_matrix(&a.scores, MatrixFormat::from_path(&a.scores))?;
    let labels = read_matrix(&a.labels, MatrixFormat::from_path(&a.labels))?;
    let report = evaluate(&scores, &labels)?;
    let mut csv = String::from("column,auc\n");
    for (i, v) in report.auc.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", v.map(|x| x.to_string()).unwrap_or_default()));
    }
    match report.mean_auc {
        Some(m) => println!("mean AUC: {m}"),
        None => println!("AUC undefined for every column"),
    }
    write_text(&out.join("eval.csv"), &csv)?;
    write_json(&out.join("eval.json"), &report)?;
    Ok(())
}

fn evaluate(scores: &DMatrix<f64>, labels: &DMatrix<f64>) -> Result<EvalReport> {
    if scores.shape() != labels.shape() {
        return Err(KdicaError::DimensionMismatch(format!(
            "scores are {:?}, labels are {:?}",
            scores.shape(),
            labels.shape()
        )));
    }
    let mut values = Vec::with_capacity(scores.ncols());
    for c in 0..scores.ncols() {
        let mut y = Vec::with_capacity(labels.nrows());
        for (r, &v) in labels.column(c).iter().enumerate() {
            if v != 0.0 && v != 1.0 {
                return Err(KdicaError::NonBinaryAttribute {
                    file: "labels".into(),
                    row: r,
                    col: c,
                    value: v,
                });
            }
            y.push(v == 1.0);
        }
        let s: Vec<f64> = scores.column(c).iter().copied().collect();
        values.push(match auc(&s, &y) {
            Ok(v) => Some(v),
            Err(KdicaError::UndefinedAuc(_)) => None,
            Err(e) => return Err(e),
        });
    }
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    let mean_auc = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(EvalReport { auc: values, mean_auc })
}

fn cmd_synth(a: &SynthArgs, command: &Command) -> std::result::Result<(), Failure> {
    let out = prepare_output(&a.output, command)?;
    let spec = a.spec();
    let data = generate(&spec)?;
    let format: MatrixFormat = a.format.into();
    for (name, ds) in [("train", &data.train), ("test", &data.test)] {
        let dir = out.join(name);
        fs::create_dir_all(&dir).map_err(|e| KdicaError::io(&dir, e))?;
        save_dataset(ds, &dir, format)?;
    }
    write_json(&out.join("synth.json"), &spec)?;
    println!(
        "wrote {} training and {} test samples to {}",
        data.train.num_samples(),
        data.test.num_samples(),
        out.display()
    );
    Ok(())
}

fn cmd_cv(a: &CvArgs, command: &Command) -> std::result::Result<(), Failure> {
    let out = prepare_output(&a.output, command)?;
    let train = load_dataset(&a.train)?;
    let report = cross_validate(&train, &a.config())?;
    let c = &report.chosen;
    println!(
        "chosen: C = {}, b = {}, gamma = {}",
        c.c,
        c.b.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
        c.gamma.map(|g| g.to_string()).unwrap_or_else(|| "-".into())
    );
    write_json(&out.join("cv.json"), &report)?;
    write_text(&out.join("cv.csv"), &cv_csv(&report))?;
    Ok(())
}
