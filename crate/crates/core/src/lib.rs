//! Functional distributional semantics for hypernymy detection.
//!
//! Synthetic taxonomies and corpora, the generative model with its amortized
//! encoder, training, count-based baselines and evaluation.

pub mod baselines;
pub mod corpusgen;
pub mod error;
pub mod evalkit;
pub mod fdsmodel;
pub mod graphdata;
pub mod hierarchy;
pub mod plot;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
