//! Grid search by class-stratified k-fold cross-validation.
//!
//! Detector `C` and component count `b` are chosen first with the
//! unsupervised objective (`gamma = 1`); for the `kdica` mode `gamma` is then
//! chosen with `(C, b)` held fixed. Cells are scored by the mean attribute AUC
//! over folds.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_representation, Mode, RepresentationConfig};
use crate::classifiers::{auc, train_svm, SvmOptions};
use crate::data::Dataset;
use crate::error::{KdicaError, Result};
use crate::kernels::KernelSpec;
use crate::rng::{derive_seed, substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub c_grid: Vec<f64>,
    pub b_grid: Vec<usize>,
    pub gamma_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub mode: Mode,
    pub kernel: KernelSpec,
    pub epsilon: Option<f64>,
    pub normalize: bool,
    pub svm: SvmOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            c_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            b_grid: vec![30, 50, 70, 90, 110, 130, 150],
            gamma_grid: vec![0.2, 0.5, 0.8],
            folds: 5,
            seed: 0,
            mode: Mode::Kdica,
            kernel: KernelSpec::default(),
            epsilon: None,
            normalize: true,
            svm: SvmOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let needs_b = self.mode != Mode::Raw;
        if self.c_grid.is_empty()
            || (needs_b && self.b_grid.is_empty())
            || (self.mode == Mode::Kdica && self.gamma_grid.is_empty())
        {
            return Err(KdicaError::InvalidConfig("empty hyperparameter grid".into()));
        }
        if self.folds < 2 {
            return Err(KdicaError::InvalidConfig(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(KdicaError::InvalidConfig("C values must be positive".into()));
        }
        if self.b_grid.contains(&0) {
            return Err(KdicaError::InvalidConfig("component counts must be positive".into()));
        }
        if self.gamma_grid.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(KdicaError::InvalidConfig("gamma values must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub c: f64,
    /// `None` in raw mode.
    pub b: Option<usize>,
    /// `None` unless the mode is `kdica`.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvStage {
    /// `(C, b)` search.
    Components,
    /// `gamma` search with `(C, b)` fixed.
    Alignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub stage: CvStage,
    pub params: Hyperparameters,
    /// Mean over folds with a defined score.
    pub mean_auc: Option<f64>,
    pub fold_auc: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub chosen: Hyperparameters,
    pub folds: usize,
    pub cells: Vec<CvCell>,
    pub warnings: Vec<String>,
}

/// Fold index per sample. Within each class, samples are shuffled and dealt
/// round-robin, continuing the rotation across classes to balance fold sizes.
pub fn class_stratified_folds(domain_labels: &[usize], num_domains: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = substream(seed, Stream::Folds, 0);
    let mut assignment = vec![0; domain_labels.len()];
    let mut next = 0;
    for y in 0..num_domains {
        let mut idx: Vec<usize> = (0..domain_labels.len()).filter(|&i| domain_labels[i] == y).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Everything one fold needs for scoring: projected train/validation features
/// (all components) and the labels.
struct FoldData {
    train_x: DMatrix<f64>,
    val_x: DMatrix<f64>,
    train_attr: DMatrix<f64>,
    val_attr: DMatrix<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Mean attribute AUC on the validation part using the first `b` columns.
fn score_fold(fold: &FoldData, b: Option<usize>, c: f64, svm: &SvmOptions, seed: u64) -> Result<Option<f64>> {
    let (tx, vx) = match b {
        Some(b) => (fold.train_x.columns(0, b).into_owned(), fold.val_x.columns(0, b).into_owned()),
        None => (fold.train_x.clone(), fold.val_x.clone()),
    };
    let per_attr: Vec<Result<Option<f64>>> = (0..fold.train_attr.ncols())
        .into_par_iter()
        .map(|a| {
            let ty: Vec<bool> = fold.train_attr.column(a).iter().map(|&v| v == 1.0).collect();
            let vy: Vec<bool> = fold.val_attr.column(a).iter().map(|&v| v == 1.0).collect();
            let det = match train_svm(&tx, &ty, c, derive_seed(seed, Stream::Svm, a as u64), svm) {
                Ok(d) => d,
                Err(KdicaError::DegenerateAttribute) => return Ok(None),
                Err(e) => return Err(e),
            };
            match auc(&det.decisions(&vx), &vy) {
                Ok(v) => Ok(Some(v)),
                Err(KdicaError::UndefinedAuc(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut values = Vec::new();
    for r in per_attr {
        if let Some(v) = r? {
            values.push(v);
        }
    }
    Ok(mean(values.into_iter()))
}

fn prepare_folds(
    train: &Dataset,
    assignment: &[usize],
    folds: usize,
    rep: &RepresentationConfig,
) -> Result<Vec<FoldData>> {
    (0..folds)
        .into_par_iter()
        .map(|f| {
            let tr: Vec<usize> = (0..assignment.len()).filter(|&i| assignment[i] != f).collect();
            let va: Vec<usize> = (0..assignment.len()).filter(|&i| assignment[i] == f).collect();
            let fold_train = train.subset(&tr);
            let fold_val = train.subset(&va);
            let mut ignored = Vec::new();
            let pipeline = fit_representation(&fold_train, rep, &mut ignored)?;
            Ok(FoldData {
                train_x: pipeline.apply(fold_train.features())?,
                val_x: pipeline.apply(fold_val.features())?,
                train_attr: fold_train.attributes().clone(),
                val_attr: fold_val.attributes().clone(),
            })
        })
        .collect()
}

/// Orders cells best-first: higher score, then smaller b, smaller C, larger gamma.
fn compare_cells(x: &CvCell, y: &CvCell) -> Ordering {
    let score = |c: &CvCell| c.mean_auc.unwrap_or(f64::NEG_INFINITY);
    score(y)
        .total_cmp(&score(x))
        .then(x.params.b.cmp(&y.params.b))
        .then(x.params.c.total_cmp(&y.params.c))
        .then(y.params.gamma.unwrap_or(0.0).total_cmp(&x.params.gamma.unwrap_or(0.0)))
}

fn evaluate(
    stage: CvStage,
    grid: Vec<Hyperparameters>,
    fold_sets: &[Vec<FoldData>],
    gamma_index: impl Fn(&Hyperparameters) -> usize + Sync,
    cfg: &ExperimentConfig,
) -> Result<Vec<CvCell>> {
    grid.into_par_iter()
        .map(|params| {
            let folds = &fold_sets[gamma_index(&params)];
            let fold_auc = folds
                .iter()
                .map(|fold| score_fold(fold, params.b, params.c, &cfg.svm, cfg.seed))
                .collect::<Result<Vec<_>>>()?;
            let mean_auc = mean(fold_auc.iter().flatten().copied());
            Ok(CvCell { stage, params, mean_auc, fold_auc })
        })
        .collect()
}

pub fn cross_validate(train: &Dataset, cfg: &ExperimentConfig) -> Result<CvReport> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let mut warn = |msg: String| {
        log::warn!("{msg}");
        warnings.push(msg);
    };

    let min_count = train.domain_counts().into_iter().min().unwrap_or(0);
    let mut folds = cfg.folds.min(train.num_samples());
    if min_count < folds {
        let reduced = min_count.max(2).min(folds);
        if reduced < cfg.folds {
            warn(format!(
                "smallest class has {min_count} samples; using {reduced} folds instead of {}",
                cfg.folds
            ));
        }
        folds = reduced;
    }
    if folds < 2 {
        return Err(KdicaError::InvalidConfig("too few samples for cross-validation".into()));
    }
    let assignment = class_stratified_folds(train.domain_labels(), train.num_domains(), folds, cfg.seed);
    let smallest_train = (0..folds)
        .map(|f| assignment.iter().filter(|&&a| a != f).count())
        .min()
        .unwrap_or(0);

    let mut b_grid: Vec<usize> = Vec::new();
    if cfg.mode != Mode::Raw {
        for &b in &cfg.b_grid {
            let clipped = b.min(smallest_train);
            if clipped != b {
                warn(format!("b = {b} clipped to {clipped} (fold training size)"));
            }
            if !b_grid.contains(&clipped) {
                b_grid.push(clipped);
            }
        }
    }
    let b_max = b_grid.iter().copied().max();

    let rep = |gamma: f64, b: usize| RepresentationConfig {
        mode: if cfg.mode == Mode::Raw { Mode::Raw } else { Mode::Kdica },
        gamma,
        num_components: b,
        kernel: cfg.kernel,
        epsilon: cfg.epsilon,
        normalize: cfg.normalize,
    };

    // Stage one: (C, b) with gamma = 1.
    let stage_one_folds = prepare_folds(train, &assignment, folds, &rep(1.0, b_max.unwrap_or(1)))?;
    let mut grid = Vec::new();
    match cfg.mode {
        Mode::Raw => grid.extend(cfg.c_grid.iter().map(|&c| Hyperparameters { c, b: None, gamma: None })),
        _ => {
            for &b in &b_grid {
                for &c in &cfg.c_grid {
                    grid.push(Hyperparameters { c, b: Some(b), gamma: None });
                }
            }
        }
    }
    let fold_sets = vec![stage_one_folds];
    let mut cells = evaluate(CvStage::Components, grid, &fold_sets, |_| 0, cfg)?;
    drop(fold_sets);
    cells.sort_by(compare_cells);
    if cells[0].mean_auc.is_none() {
        warn("no grid cell produced a defined AUC; falling back to tie-break order".into());
    }
    let mut chosen = cells[0].params;

    if cfg.mode == Mode::Kdica {
        let b = chosen.b.expect("b chosen in projection modes");
        let gamma_folds = cfg
            .gamma_grid
            .iter()
            .map(|&g| prepare_folds(train, &assignment, folds, &rep(g, b)))
            .collect::<Result<Vec<_>>>()?;
        let grid: Vec<Hyperparameters> = cfg
            .gamma_grid
            .iter()
            .map(|&g| Hyperparameters { c: chosen.c, b: Some(b), gamma: Some(g) })
            .collect();
        let gammas = cfg.gamma_grid.clone();
        let mut stage_two = evaluate(
            CvStage::Alignment,
            grid,
            &gamma_folds,
            |p| gammas.iter().position(|g| Some(*g) == p.gamma).unwrap_or(0),
            cfg,
        )?;
        stage_two.sort_by(compare_cells);
        chosen = stage_two[0].params;
        cells.extend(stage_two);
    }

    Ok(CvReport {
        chosen,
        folds,
        cells,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate, SynthSpec};

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<usize> = (0..53).map(|i| i % 4).collect();
        let a = class_stratified_folds(&labels, 4, 5, 9);
        assert_eq!(a.len(), 53);
        for f in 0..5 {
            let n = a.iter().filter(|&&x| x == f).count();
            assert!((10..=11).contains(&n));
            for y in 0..4 {
                assert!((0..53).any(|i| a[i] == f && labels[i] == y));
            }
        }
        assert_eq!(a, class_stratified_folds(&labels, 4, 5, 9));
    }

    fn small_train() -> Dataset {
        let spec = SynthSpec { samples_per_domain: 15, seed: 1, ..Default::default() };
        generate(&spec).unwrap().train
    }

    #[test]
    fn single_cell_grid() {
        let cfg = ExperimentConfig {
            c_grid: vec![1.0],
            b_grid: vec![10],
            gamma_grid: vec![0.5],
            folds: 3,
            ..Default::default()
        };
        let r = cross_validate(&small_train(), &cfg).unwrap();
        assert_eq!(r.chosen, Hyperparameters { c: 1.0, b: Some(10), gamma: Some(0.5) });
        assert_eq!(r.cells.len(), 2);
        assert!(r.cells.iter().all(|c| c.mean_auc.is_some() && c.fold_auc.len() == 3));
    }

    #[test]
    fn empty_grid_is_an_error() {
        let cfg = ExperimentConfig { c_grid: vec![], ..Default::default() };
        assert!(matches!(cross_validate(&small_train(), &cfg), Err(KdicaError::InvalidConfig(_))));
        let raw = ExperimentConfig { mode: Mode::Raw, b_grid: vec![], c_grid: vec![1.0], folds: 3, ..Default::default() };
        assert!(cross_validate(&small_train(), &raw).is_ok());
    }

    #[test]
    fn deterministic_and_clipped() {
        let cfg = ExperimentConfig {
            c_grid: vec![0.1, 1.0],
            b_grid: vec![5, 500],
            gamma_grid: vec![0.2, 0.8],
            folds: 3,
            seed: 4,
            ..Default::default()
        };
        let a = cross_validate(&small_train(), &cfg).unwrap();
        let b = cross_validate(&small_train(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.warnings.iter().any(|w| w.contains("clipped")));
        assert_eq!(a.cells.len(), 2 * 2 + 2);
    }

    #[test]
    fn tie_break_order() {
        let cell = |c, b, g| CvCell {
            stage: CvStage::Components,
            params: Hyperparameters { c, b: Some(b), gamma: g },
            mean_auc: Some(0.7),
            fold_auc: vec![],
        };
        let mut cells = vec![cell(1.0, 50, None), cell(10.0, 30, None), cell(0.1, 30, None)];
        cells.sort_by(compare_cells);
        assert_eq!(cells[0].params, Hyperparameters { c: 0.1, b: Some(30), gamma: None });
        let mut g = vec![cell(1.0, 30, Some(0.2)), cell(1.0, 30, Some(0.8))];
        g.sort_by(compare_cells);
        assert_eq!(g[0].params.gamma, Some(0.8));
    }
}
