//! Category-invariant, attribute-discriminative kernel features.
//!
//! Treating every object category as its own domain, [`kdica`] learns a
//! kernel projection that keeps data variance and alignment with attribute
//! labels high while shrinking the spread between per-category distributions.
//! Linear attribute detectors trained on the projected features then carry
//! over better to categories never seen during training. On top of that the
//! [`apps`] module provides attribute detection, zero-shot classification by
//! direct attribute prediction, and multi-attribute retrieval.

pub mod apps;
pub mod classifiers;
pub mod cli;
pub mod container;
pub mod data;
pub mod error;
pub mod kdica;
pub mod kernels;
pub mod rng;
pub mod synthetic;
pub mod variance;

#[cfg(test)]
#[path = "../tests/common/oracles.rs"]
mod testutil;

pub use error::{KdicaError, Result};
