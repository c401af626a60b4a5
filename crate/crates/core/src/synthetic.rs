//! Seeded multi-domain attribute datasets.
//!
//! Every domain gets a binary attribute signature. A sample of domain `y`
//! draws attributes `a` around that signature and gets features
//!
//! ```text
//!   x = s_a W_a a + s_d W_d e_y + noise * N(0, I)
//! ```
//!
//! where the columns of `W_a` (one per attribute) and `W_d` (one per domain)
//! are orthonormal. The domain term is a nuisance: it is correlated with
//! the attributes inside each training domain but carries no information
//! about attributes on the held-out domains.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{AttributeSource, ClassSignatures, Dataset};
use crate::error::{KdicaError, Result};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_domains: usize,
    /// The last `test_domains` domain ids are held out.
    pub test_domains: usize,
    pub samples_per_domain: usize,
    pub num_attributes: usize,
    pub dim: usize,
    pub attribute_strength: f64,
    pub domain_strength: f64,
    pub noise: f64,
    /// Probability that a sample's attribute disagrees with its domain signature.
    pub flip_probability: f64,
    /// Probability that a signature bit copies an earlier attribute's bit.
    pub attribute_correlation: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            num_domains: 8,
            test_domains: 2,
            samples_per_domain: 40,
            num_attributes: 4,
            dim: 20,
            attribute_strength: 1.0,
            domain_strength: 2.0,
            noise: 0.5,
            flip_probability: 0.1,
            attribute_correlation: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(KdicaError::InvalidConfig(m));
        if self.test_domains == 0 || self.test_domains >= self.num_domains {
            return bad(format!(
                "need 1..{} test domains, got {}",
                self.num_domains, self.test_domains
            ));
        }
        if self.samples_per_domain == 0 || self.num_attributes == 0 {
            return bad("samples per domain and attribute count must be positive".into());
        }
        if self.dim < self.num_attributes + self.num_domains {
            return bad(format!(
                "dimension {} is smaller than attributes + domains = {}",
                self.dim,
                self.num_attributes + self.num_domains
            ));
        }
        if self.num_attributes < 63 && (1u64 << self.num_attributes) < self.test_domains as u64 {
            return bad(format!(
                "{} attributes cannot give {} distinct test signatures",
                self.num_attributes, self.test_domains
            ));
        }
        for (name, v) in [
            ("attribute strength", self.attribute_strength),
            ("domain strength", self.domain_strength),
            ("noise", self.noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        for (name, v) in [
            ("flip probability", self.flip_probability),
            ("attribute correlation", self.attribute_correlation),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub train: Dataset,
    pub test: Dataset,
    /// `D x A`
    pub attribute_basis: DMatrix<f64>,
    /// `D x C`
    pub domain_basis: DMatrix<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn draw_signature(rng: &mut ChaCha8Rng, a: usize, corr: f64) -> Vec<f64> {
    let mut sig: Vec<f64> = Vec::with_capacity(a);
    for j in 0..a {
        let bit = if j > 0 && rng.random_bool(corr) {
            sig[rng.random_range(0..j)]
        } else if rng.random_bool(0.5) {
            1.0
        } else {
            0.0
        };
        sig.push(bit);
    }
    sig
}

pub fn generate(spec: &SynthSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let (c, a, d) = (spec.num_domains, spec.num_attributes, spec.dim);
    let mut basis_rng = substream(spec.seed, Stream::Synthetic, 0);
    let mut sig_rng = substream(spec.seed, Stream::Synthetic, 1);
    let mut sample_rng = substream(spec.seed, Stream::Synthetic, 2);

    let g = DMatrix::from_fn(d, a + c, |_, _| gaussian(&mut basis_rng));
    let q = g.qr().q();
    let attribute_basis = q.columns(0, a).into_owned();
    let domain_basis = q.columns(a, c).into_owned();

    let first_test = c - spec.test_domains;
    let mut signatures = DMatrix::zeros(c, a);
    let mut seen_test = BTreeSet::new();
    for y in 0..c {
        let mut attempts = 0;
        let sig = loop {
            let s = draw_signature(&mut sig_rng, a, spec.attribute_correlation);
            if y < first_test {
                break s;
            }
            let key: Vec<bool> = s.iter().map(|&v| v == 1.0).collect();
            if seen_test.insert(key) {
                break s;
            }
            attempts += 1;
            if attempts > 10_000 {
                return Err(KdicaError::InvalidConfig(
                    "could not draw distinct signatures for the test domains".into(),
                ));
            }
        };
        for (j, v) in sig.into_iter().enumerate() {
            signatures[(y, j)] = v;
        }
    }

    let m = c * spec.samples_per_domain;
    let mut features = DMatrix::zeros(m, d);
    let mut attributes = DMatrix::zeros(m, a);
    let mut labels = Vec::with_capacity(m);
    for y in 0..c {
        for s in 0..spec.samples_per_domain {
            let row = y * spec.samples_per_domain + s;
            labels.push(y as i64);
            for j in 0..a {
                let flip = rng_flip(&mut sample_rng, spec.flip_probability);
                let bit = signatures[(y, j)];
                attributes[(row, j)] = if flip { 1.0 - bit } else { bit };
            }
            for k in 0..d {
                let signal: f64 = (0..a).map(|j| attribute_basis[(k, j)] * attributes[(row, j)]).sum();
                features[(row, k)] = spec.attribute_strength * signal
                    + spec.domain_strength * domain_basis[(k, y)]
                    + spec.noise * gaussian(&mut sample_rng);
            }
        }
    }

    let names: Vec<String> = (0..a).map(|j| format!("attr_{j}")).collect();
    let full = Dataset::new(
        features,
        &labels,
        AttributeSource::PerSample(attributes),
        Some(names),
        Some(ClassSignatures {
            ids: (0..c as i64).collect(),
            values: signatures,
        }),
    )?;
    let split = first_test * spec.samples_per_domain;
    let train_idx: Vec<usize> = (0..split).collect();
    let test_idx: Vec<usize> = (split..m).collect();
    Ok(SyntheticData {
        train: full.subset(&train_idx),
        test: full.subset(&test_idx),
        attribute_basis,
        domain_basis,
    })
}

fn rng_flip(rng: &mut ChaCha8Rng, p: f64) -> bool {
    p > 0.0 && rng.random_bool(p)
}
