//! Active image synthesis for enhanced learning.
//!
//! The library trains a bidirectional generative model (generator, critic,
//! encoder) on a small image corpus, quantifies classifier uncertainty over
//! the latent feature box `[-1,1]^r`, selects a batch of virtual samples by
//! energy-distance support-point optimization, labels them through a
//! pluggable oracle, and retrains an improved classifier.

pub mod config;
pub mod error;
pub mod gin;
pub mod nn;
pub mod pipeline;
pub mod sampler;
pub mod uncertainty;

pub use error::{Error, Result};
