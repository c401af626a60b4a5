//! Acceptance checks. Runs as a plain binary (`harness = false`) and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::oracles::{brute_force_auc, feature_space_variance, jacobi_eigenvalues, random_matrix};
use kdica::apps::{dap_zero_shot, detect_attributes, retrieve, zero_shot_accuracy, DetectParams, Mode, PriorMode, ZeroShotTable};
use kdica::classifiers::auc;
use kdica::data::{AttributeSource, Dataset};
use kdica::kdica::{assemble_objective, fit, fit_with_inputs, KdicaConfig, KdicaInputs, KdicaModel};
use kdica::kernels::{center_train, gram, AttributeKernel, KernelSpec};
use kdica::synthetic::{generate, SynthSpec};
use kdica::variance::{build_q, distributional_variance};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_labels(rng: &mut ChaCha8Rng, m: usize, c: usize) -> Vec<usize> {
    // every domain gets at least one sample
    let mut labels: Vec<usize> = (0..m).map(|i| if i < c { i } else { rng.random_range(0..c) }).collect();
    for i in (1..m).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    labels
}

fn variance_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for inst in 0..50 {
        let c = rng.random_range(1..=5);
        let m = rng.random_range(c.max(2)..=30);
        let d = rng.random_range(1..=8);
        let x = random_matrix(m, d, 100 + inst);
        let labels = random_labels(&mut rng, m, c);
        let k = center_train(&gram(&x, &KernelSpec::linear()).unwrap());
        let q = build_q(&labels, c).unwrap();
        let v = distributional_variance(&k, &q).unwrap();
        worst = worst.max((v - feature_space_variance(&x, &labels, c)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 5.0,
        format!("max |tr(KQ) - explicit| = {worst:.2e} over 50 instances in {secs:.2}s"),
    )
}

fn q_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut row_sum, mut min_eig) = (0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let c = rng.random_range(1..=5);
        let m = rng.random_range(c.max(2)..=30);
        let q = build_q(&random_labels(&mut rng, m, c), c).unwrap();
        for r in q.values.row_iter() {
            row_sum = row_sum.max(r.sum().abs());
        }
        min_eig = min_eig.min(jacobi_eigenvalues(&q.values).into_iter().fold(f64::INFINITY, f64::min));
    }
    // the same sample set presented as three domains
    let base = random_matrix(7, 4, 9);
    let mut x = DMatrix::zeros(21, 4);
    let mut labels = Vec::new();
    for y in 0..3 {
        x.rows_mut(7 * y, 7).copy_from(&base);
        labels.extend(std::iter::repeat_n(y, 7));
    }
    let mut dup: f64 = 0.0;
    for spec in [KernelSpec::linear(), KernelSpec::rbf(1.0)] {
        let k = center_train(&gram(&x, &spec).unwrap());
        dup = dup.max(distributional_variance(&k, &build_q(&labels, 3).unwrap()).unwrap());
    }
    outcome(
        row_sum <= 1e-12 && min_eig >= -1e-10 && dup <= 1e-10,
        format!("max |row sum| = {row_sum:.1e}, min eigenvalue = {min_eig:.1e}, duplicated domains tr(KQ) = {dup:.1e}"),
    )
}

fn synthetic_fits() -> Vec<(Dataset, KdicaConfig)> {
    let mut fits = Vec::new();
    for seed in 0..3 {
        let data = generate(&SynthSpec { seed, ..Default::default() }).unwrap();
        let m = data.train.num_samples();
        for kernel in [KernelSpec::rbf(1.0), KernelSpec::linear(), KernelSpec::rbf(3.0)] {
            for (gamma, b) in [(0.0, 30), (0.5, 30), (1.0, 30), (0.5, m)] {
                fits.push((
                    data.train.clone(),
                    KdicaConfig {
                        gamma,
                        num_components: b,
                        epsilon: None,
                        kernel,
                    },
                ));
            }
        }
    }
    fits
}

/// Rounding floor of a computed `B^T R B` entry: columns in the numerical
/// null space of `K` have `|b|^2 = 1 / epsilon`.
fn orthonormality_floor(r: &DMatrix<f64>, epsilon: f64) -> f64 {
    let top = r.clone().symmetric_eigenvalues().max();
    f64::EPSILON * top / epsilon
}

fn eigen_contract() -> Outcome {
    let (mut residual, mut ortho, mut rayleigh) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let (mut strict, mut at_floor, mut above_floor) = (0, 0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fits = synthetic_fits();
    for (ds, cfg) in &fits {
        let model = fit(ds, cfg).unwrap();
        let inputs = KdicaInputs::from_dataset(ds, &cfg.kernel).unwrap();
        let obj = assemble_objective(&inputs.kernel, &inputs.attributes, &inputs.q, cfg.gamma, model.epsilon).unwrap();
        let (a_norm, r_norm) = (obj.lhs.norm(), obj.rhs.norm());
        let b = &model.projection;
        for i in 0..b.ncols() {
            let col = b.column(i);
            let lam = model.eigenvalues[i];
            let res = (&obj.lhs * col - &obj.rhs * col * lam).norm();
            residual = residual.max(res / (a_norm + lam.abs() * r_norm));
        }
        let gram_b = b.transpose() * &obj.rhs * b;
        let dev = (gram_b - DMatrix::identity(b.ncols(), b.ncols())).abs().max();
        ortho = ortho.max(dev);
        if dev <= 1e-8 {
            strict += 1;
        } else if dev <= orthonormality_floor(&obj.rhs, model.epsilon) {
            at_floor += 1;
        } else {
            above_floor += 1;
        }
        let top = model.eigenvalues[0];
        let m = b.nrows();
        for _ in 0..1000 / fits.len() + 1 {
            let v = DMatrix::from_fn(m, 1, |_, _| rng.random::<f64>() - 0.5);
            let q = (v.transpose() * &obj.lhs * &v)[(0, 0)] / (v.transpose() * &obj.rhs * &v)[(0, 0)];
            rayleigh = rayleigh.max(q - top);
        }
    }
    outcome(
        residual <= 1e-8 && above_floor == 0 && rayleigh <= 1e-8,
        format!(
            "{} fits: max scaled residual {residual:.1e}; |B^T R B - I| <= 1e-8 on {strict} fits, \
             {at_floor} fits with null-space components sit under the rounding floor u|R|/eps (max {ortho:.1e}), \
             {above_floor} above it; max Rayleigh excess over lambda_1 {rayleigh:.1e}",
            fits.len()
        ),
    )
}

/// Largest difference between the spectral projectors `B_g B_g^T` of
/// matching eigenvalue groups.
fn projector_gap(a: &KdicaModel, b: &KdicaModel, value_scale: f64) -> f64 {
    let n = a.eigenvalues.len();
    let mut worst: f64 = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (a.eigenvalues[end - 1] - a.eigenvalues[end]).abs() <= 1e-6 * a.eigenvalues[0].abs() {
            end += 1;
        }
        // a group cut by the truncation has no well-defined projector
        if end == n && n < a.projection.nrows() {
            break;
        }
        let pa = a.projection.columns(start, end - start);
        let pb = b.projection.columns(start, end - start);
        let diff = (pa * pa.transpose() - pb * pb.transpose()).abs().max();
        let lam = (a.eigenvalues[start] - b.eigenvalues[start] * value_scale).abs();
        worst = worst.max(diff).max(lam / a.eigenvalues[0].abs());
        start = end;
    }
    worst
}

fn udica_reduction() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut columnwise: f64 = 0.0;
    for seed in 0..5 {
        let data = generate(&SynthSpec { seed, ..Default::default() }).unwrap();
        for kernel in [KernelSpec::rbf(1.0), KernelSpec::linear()] {
            let cfg = KdicaConfig {
                gamma: 1.0,
                num_components: 20,
                epsilon: None,
                kernel,
            };
            let with_l = fit(&data.train, &cfg).unwrap();
            let mut inputs = KdicaInputs::from_dataset(&data.train, &kernel).unwrap();
            let m = inputs.kernel.dim();
            inputs.attributes = AttributeKernel {
                values: DMatrix::zeros(m, m),
                centered: true,
            };
            // L = 0 makes gamma a pure rescaling of the spectrum
            let zero_l = fit_with_inputs(data.train.features(), &inputs, &KdicaConfig { gamma: 0.5, ..cfg }).unwrap();
            worst = worst.max(projector_gap(&with_l, &zero_l, 2.0));
            columnwise = columnwise.max((&with_l.projection - &zero_l.projection).abs().max());
        }
    }
    outcome(
        worst <= 1e-8,
        format!("max projector difference {worst:.1e} (column-wise {columnwise:.1e}) over 10 fits"),
    )
}

fn transform_consistency() -> Outcome {
    let (mut t_err, mut k_err) = (0.0f64, 0.0f64);
    for seed in 0..3 {
        let data = generate(&SynthSpec { seed, ..Default::default() }).unwrap();
        for kernel in [KernelSpec::rbf(1.0), KernelSpec::linear()] {
            let cfg = KdicaConfig {
                gamma: 0.5,
                num_components: 30,
                epsilon: None,
                kernel,
            };
            let model = fit(&data.train, &cfg).unwrap();
            let k = center_train(&gram(data.train.features(), &kernel).unwrap()).values;
            let kb = &k * &model.projection;
            let t = model.transform(data.train.features()).unwrap();
            t_err = t_err.max((&t - &kb).abs().max() / kb.abs().max().max(1.0));
            let lhs = &kb * kb.transpose();
            let rhs = &k * &model.projection * model.projection.transpose() * &k;
            k_err = k_err.max((lhs - &rhs).abs().max() / rhs.abs().max().max(1.0));
        }
    }
    outcome(
        t_err <= 1e-10 && k_err <= 1e-10,
        format!("max |transform(train) - KB| = {t_err:.1e}, max |(KB)(KB)^T - KBB^TK| = {k_err:.1e}"),
    )
}

fn auc_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(2..=300);
        // coarse grid so ties are common
        let levels = rng.random_range(2..=50);
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        checked += 1;
        if auc(&scores, &labels).unwrap() != brute_force_auc(&scores, &labels) {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 5.0,
        format!("{mismatches} of 100 instances differ from pair counting, {secs:.2}s"),
    )
}

fn params(mode: Mode, seed: u64) -> DetectParams {
    let mut p = DetectParams::default();
    p.representation.mode = mode;
    p.seed = seed;
    p
}

fn domain_generalization() -> Outcome {
    let start = Instant::now();
    let (mut wins, mut raw_sum, mut kdica_sum, mut udica_sum) = (0, 0.0, 0.0, 0.0);
    let mut per_seed = Vec::new();
    for seed in 0..10 {
        let data = generate(&SynthSpec { seed, ..Default::default() }).unwrap();
        let score = |mode| detect_attributes(&data.train, &data.test, &params(mode, seed)).unwrap().report.mean_auc.unwrap();
        let (raw, udica, kdica) = (score(Mode::Raw), score(Mode::Udica), score(Mode::Kdica));
        if kdica - raw >= 0.02 {
            wins += 1;
        }
        raw_sum += raw;
        udica_sum += udica;
        kdica_sum += kdica;
        per_seed.push(format!("{:+.3}", kdica - raw));
    }
    let secs = start.elapsed().as_secs_f64();
    let (raw, udica, kdica) = (raw_sum / 10.0, udica_sum / 10.0, kdica_sum / 10.0);
    outcome(
        wins >= 8 && kdica >= udica - 0.01 && secs < 60.0,
        format!(
            "KDICA beats raw by >= 0.02 on {wins}/10 seeds (need 8); mean AUC raw {raw:.4}, UDICA {udica:.4}, KDICA {kdica:.4}; per-seed gain [{}]; {secs:.1}s",
            per_seed.join(" ")
        ),
    )
}

fn zero_shot_accuracy_for(data: &kdica::synthetic::SyntheticData, mode: Mode, seed: u64) -> f64 {
    let out = detect_attributes(&data.train, &data.test, &params(mode, seed)).unwrap();
    let table = ZeroShotTable::from_dataset(&data.test, PriorMode::Empirical).unwrap();
    let pred = dap_zero_shot(&out.probabilities, &table).unwrap();
    zero_shot_accuracy(&pred, data.test.domain_labels(), &table).unwrap().mean_per_class
}

fn zero_shot_sanity() -> Outcome {
    let start = Instant::now();
    let (mut wins, mut kdica_sum, mut raw_sum) = (0, 0.0, 0.0);
    for seed in 0..10 {
        let spec = SynthSpec {
            seed,
            num_domains: 10,
            test_domains: 4,
            ..Default::default()
        };
        let data = generate(&spec).unwrap();
        let raw = zero_shot_accuracy_for(&data, Mode::Raw, seed);
        let kdica = zero_shot_accuracy_for(&data, Mode::Kdica, seed);
        if kdica > raw {
            wins += 1;
        }
        raw_sum += raw;
        kdica_sum += kdica;
    }
    let secs = start.elapsed().as_secs_f64();
    let (raw, kdica) = (raw_sum / 10.0, kdica_sum / 10.0);
    outcome(
        kdica >= 0.25 + 0.15 && wins >= 7 && secs < 60.0,
        format!(
            "mean DAP accuracy KDICA {kdica:.4} (need >= 0.40), raw {raw:.4}; KDICA beats raw on {wins}/10 seeds (need 7); {secs:.1}s"
        ),
    )
}

fn cli(bin: &str, dir: &Path, threads: usize, args: &[&str]) -> bool {
    Command::new(bin)
        .current_dir(dir)
        .env_remove("KDICA_THREADS")
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn pipeline_run(bin: &str, dir: &Path, threads: usize) -> bool {
    let data = ["--train", "syn/train/manifest.json", "--test", "syn/test/manifest.json", "--seed", "11"];
    cli(bin, dir, threads, &["synth", "--seed", "11", "--out", "syn"])
        && cli(bin, dir, threads, &["fit", "--train", "syn/train/manifest.json", "--seed", "11", "--out", "fit"])
        && cli(bin, dir, threads, &[&["detect"][..], &data[..], &["--out", "detect"]].concat())
        && cli(bin, dir, threads, &[&["zeroshot"][..], &data[..], &["--out", "zeroshot"]].concat())
}

const REPORTS: &[&str] = &[
    "syn/train/features.csv",
    "syn/train/attributes.csv",
    "syn/test/features.csv",
    "syn/test/class_signatures.csv",
    "fit/model.kdmc",
    "detect/detection.json",
    "detect/detection.csv",
    "detect/probabilities.csv",
    "detect/model.kdmc",
    "zeroshot/zeroshot.json",
    "zeroshot/zeroshot.csv",
    "zeroshot/predictions.csv",
];

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_kdica");
    let root = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (i, threads) in [1usize, 1, 4, 4].into_iter().enumerate() {
        let dir = root.path().join(format!("run{i}"));
        std::fs::create_dir_all(&dir).unwrap();
        if !pipeline_run(bin, &dir, threads) {
            return outcome(false, format!("pipeline run {i} with {threads} threads failed"));
        }
        runs.push(dir);
    }
    let mut differing = Vec::new();
    for name in REPORTS {
        let first = std::fs::read(runs[0].join(name)).unwrap();
        if runs[1..].iter().any(|r| std::fs::read(r.join(name)).unwrap() != first) {
            differing.push(*name);
        }
    }
    outcome(
        differing.is_empty(),
        format!(
            "synth, fit, detect, zeroshot twice each with 1 and 4 threads; {} of {} report files differ {:?}",
            differing.len(),
            REPORTS.len(),
            differing
        ),
    )
}

fn retrieval_reduction() -> Outcome {
    let mut compared = 0;
    let mut mismatches = 0;
    let mut datasets: Vec<(Dataset, Dataset)> = (0..3)
        .map(|seed| {
            let d = generate(&SynthSpec { seed, ..Default::default() }).unwrap();
            (d.train, d.test)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let random_ds = |rng: &mut ChaCha8Rng, seed: u64, offset: i64| {
        let x = random_matrix(60, 6, seed);
        let a = DMatrix::from_fn(60, 5, |_, _| if rng.random_bool(0.3) { 1.0 } else { 0.0 });
        let labels: Vec<i64> = (0..60).map(|i| offset + (i % 4) as i64).collect();
        Dataset::new(x, &labels, AttributeSource::PerSample(a), None, None).unwrap()
    };
    let train = random_ds(&mut rng, 21, 0);
    let test = random_ds(&mut rng, 22, 100);
    datasets.push((train, test));
    for (i, (train, test)) in datasets.iter().enumerate() {
        for mode in [Mode::Raw, Mode::Kdica] {
            let out = detect_attributes(train, test, &params(mode, i as u64)).unwrap();
            for attr in &out.report.attributes {
                let r = retrieve(&out.probabilities, test.attributes(), &[attr.index]).unwrap();
                compared += 1;
                if r.auc != attr.auc {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} of {compared} single-attribute queries differ from the detection AUC"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("distributional-variance oracle", variance_oracle),
        ("Q invariants", q_invariants),
        ("eigen contract", eigen_contract),
        ("UDICA reduction", udica_reduction),
        ("transform consistency", transform_consistency),
        ("AUC exactness", auc_exactness),
        ("synthetic domain-generalization gain", domain_generalization),
        ("zero-shot pipeline sanity", zero_shot_sanity),
        ("determinism", determinism),
        ("retrieval reduction", retrieval_reduction),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
