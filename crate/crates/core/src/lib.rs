//! Founder-success prediction from structured career records.
//!
//! The pipeline parses embedded-JSON career fields into [`record`] types,
//! derives a fixed 28-column feature set ([`features`]), forces positives
//! with deterministic [`rules`], and classifies the rest with gradient-boosted
//! decision stumps ([`boost`]). [`metrics`] and [`pipeline`] implement the
//! stratified holdout and k-fold evaluation; [`harness`] adds calibrated
//! synthetic data, ablation variants and diagnostic reports.

pub mod boost;
pub mod error;
pub mod features;
pub mod harness;
pub mod metrics;
pub mod pipeline;
pub mod record;
pub mod rng;
pub mod rules;
pub mod vocab;

pub use error::{Error, Result};
