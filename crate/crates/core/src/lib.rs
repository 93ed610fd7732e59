//! Topic quality for LDA models: posterior variability from a collapsed Gibbs
//! sampler, co-occurrence metrics (PMI, NPMI, Coherence), and a kernel SVR
//! that combines them into a single predicted rating.
//!
//! Typical flow: [`corpus::preprocess`] a raw collection, [`sampler::run_chain`]
//! to collect posterior samples, score topics with [`posterior_metrics`] and
//! [`cooccurrence`], then fit [`estimator::train_svr`] against human ratings
//! and check it with [`evaluation`].

pub mod cli;
pub mod cooccurrence;
pub mod corpus;
pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod manifest;
pub mod posterior_metrics;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
