use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::apps::{DetectorConfig, ExperimentConfig, Mode, PriorMode, RepresentationConfig};
use crate::classifiers::SvmOptions;
use crate::data::MatrixFormat;
use crate::kernels::KernelSpec;
use crate::synthetic::SynthSpec;

pub const DEFAULT_SEED: u64 = 20150607;

#[derive(Debug, Parser)]
#[command(name = "kdica", version, about = "Category-invariant kernel features for attribute detection")]
pub struct Cli {
    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true, env = "KDICA_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "command")]
pub enum Command {
    /// Learn a projection on a training set and save it.
    Fit(FitArgs),
    /// Map features through a saved model.
    Transform(TransformArgs),
    /// Train attribute detectors and score them on unseen classes.
    Detect(DetectArgs),
    /// Direct attribute prediction on unseen classes.
    Zeroshot(ZeroshotArgs),
    /// Rank unseen-class samples for attribute queries.
    Retrieve(RetrieveArgs),
    /// AUC of score columns against 0/1 label columns.
    Eval(EvalArgs),
    /// Generate a synthetic multi-domain dataset.
    Synth(SynthArgs),
    /// Two-stage cross-validation of C, b and gamma.
    Cv(CvArgs),
    /// Re-run the command recorded in a run.json.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = "kdica-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

/// Either explicit train/test manifests or one manifest split by class.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DataArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Single manifest to split into seen and unseen classes.
    #[arg(long, conflicts_with_all = ["train", "test"])]
    pub data: Option<PathBuf>,
    /// Unseen class ids when splitting `--data`.
    #[arg(long, value_delimiter = ',', requires = "data")]
    pub test_classes: Vec<i64>,
    /// Number of randomly held-out classes when splitting `--data`.
    #[arg(long, requires = "data", conflicts_with = "test_classes")]
    pub num_test_classes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Rbf,
    Linear,
}

#[derive(Debug, Clone, Copy, Args, Serialize, Deserialize)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    pub kernel: KernelArg,
    /// RBF width in `exp(-d^2 / (2 sigma^2))`.
    #[arg(long, default_value_t = 1.0, conflicts_with = "rbf_gamma")]
    pub sigma: f64,
    /// RBF coefficient in `exp(-gamma d^2)`, instead of `--sigma`.
    #[arg(long)]
    pub rbf_gamma: Option<f64>,
    /// Ridge added to the right-hand side; defaults to 1e-8 tr(K)/M.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Skip L2 normalization of the input features.
    #[arg(long)]
    pub no_normalize: bool,
}

impl KernelArgs {
    pub fn spec(&self) -> KernelSpec {
        match (self.kernel, self.rbf_gamma) {
            (KernelArg::Linear, _) => KernelSpec::linear(),
            (KernelArg::Rbf, Some(g)) => KernelSpec::rbf_gamma(g),
            (KernelArg::Rbf, None) => KernelSpec::rbf(self.sigma),
        }
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize, Deserialize)]
pub struct RepresentationArgs {
    #[arg(long, default_value_t = Mode::Kdica)]
    pub mode: Mode,
    /// Weight of the data-variance term against attribute alignment.
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Number of components.
    #[arg(long = "b", default_value_t = 30)]
    pub b: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
}

impl RepresentationArgs {
    pub fn config(&self) -> RepresentationConfig {
        RepresentationConfig {
            mode: self.mode,
            gamma: self.gamma,
            num_components: self.b,
            kernel: self.kernel.spec(),
            epsilon: self.kernel.epsilon,
            normalize: !self.kernel.no_normalize,
        }
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize, Deserialize)]
pub struct SvmArgs {
    #[arg(long, default_value_t = 2000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
}

impl SvmArgs {
    pub fn options(&self) -> SvmOptions {
        SvmOptions {
            max_epochs: self.max_epochs,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize, Deserialize)]
pub struct DetectorArgs {
    /// SVM regularization constant.
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.2)]
    pub calibration_fraction: f64,
    #[command(flatten)]
    pub svm: SvmArgs,
    /// Fail when more than this fraction of attributes is skipped.
    #[arg(long, default_value_t = 0.5)]
    pub max_skip_ratio: f64,
}

impl DetectorArgs {
    pub fn config(&self) -> DetectorConfig {
        DetectorConfig {
            c: self.c,
            svm: self.svm.options(),
            calibration_fraction: self.calibration_fraction,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Training manifest.
    #[arg(long)]
    pub train: PathBuf,
    #[command(flatten)]
    pub representation: RepresentationArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TransformArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset manifest, or a bare feature matrix (.csv or .kdmx).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub representation: RepresentationArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorArg {
    Empirical,
    Uniform,
}

impl From<PriorArg> for PriorMode {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Empirical => PriorMode::Empirical,
            PriorArg::Uniform => PriorMode::Uniform,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ZeroshotArgs {
    #[command(flatten)]
    pub detect: DetectArgs,
    /// Attribute priors in the DAP denominator.
    #[arg(long, value_enum, default_value_t = PriorArg::Empirical)]
    pub priors: PriorArg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RetrieveArgs {
    #[command(flatten)]
    pub detect: DetectArgs,
    /// Attributes of one query, by name or index, comma separated. Repeatable.
    #[arg(long = "query")]
    pub queries: Vec<String>,
    /// Without `--query`, run every query of up to this many attributes.
    #[arg(long, default_value_t = 2)]
    pub max_query_size: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Score matrix, one column per attribute.
    #[arg(long)]
    pub scores: PathBuf,
    /// 0/1 matrix of the same shape.
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Kdmx,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => MatrixFormat::Csv,
            FormatArg::Kdmx => MatrixFormat::Kdmx,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 8)]
    pub domains: usize,
    #[arg(long, default_value_t = 2)]
    pub test_domains: usize,
    #[arg(long, default_value_t = 40)]
    pub samples: usize,
    #[arg(long, default_value_t = 4)]
    pub attributes: usize,
    #[arg(long, default_value_t = 20)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub attribute_strength: f64,
    #[arg(long, default_value_t = 2.0)]
    pub domain_strength: f64,
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.1)]
    pub flip: f64,
    #[arg(long, default_value_t = 0.0)]
    pub correlation: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl SynthArgs {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            num_domains: self.domains,
            test_domains: self.test_domains,
            samples_per_domain: self.samples,
            num_attributes: self.attributes,
            dim: self.dim,
            attribute_strength: self.attribute_strength,
            domain_strength: self.domain_strength,
            noise: self.noise,
            flip_probability: self.flip,
            attribute_correlation: self.correlation,
            seed: self.output.seed,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CvArgs {
    /// Training manifest.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, default_value_t = Mode::Kdica)]
    pub mode: Mode,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 1.0, 10.0, 100.0])]
    pub c_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [30, 50, 70, 90, 110, 130, 150])]
    pub b_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.5, 0.8])]
    pub gamma_grid: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub svm: SvmArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl CvArgs {
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            c_grid: self.c_grid.clone(),
            b_grid: self.b_grid.clone(),
            gamma_grid: self.gamma_grid.clone(),
            folds: self.folds,
            seed: self.output.seed,
            mode: self.mode,
            kernel: self.kernel.spec(),
            epsilon: self.kernel.epsilon,
            normalize: !self.kernel.no_normalize,
            svm: self.svm.options(),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A run.json written by an earlier invocation.
    pub run: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
