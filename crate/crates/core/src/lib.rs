//! Confirmation-bias-weighted gravity well model of online echo chambers.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! * [`ingest`] parses comment dumps, rebuilds threads and extracts each
//!   user's parent-comment contexts and observed exit order.
//! * [`scoring`] turns contexts into five-level support/alignment scores
//!   through a pluggable backend (remote chat model or deterministic mock)
//!   behind a persistent cache.
//! * [`bias`] folds those scores into a per-user bias mass in `[0.5, 2]`.
//! * [`gravity`] evaluates the pull force of each subreddit on its users and
//!   ranks users by predicted exit.
//! * [`metrics`] compares predicted and observed exit orders (Spearman with a
//!   one-sided p-value) and calibrates scorers against human labels (QWK, NMAE).
//!
//! [`pipeline`] wires the stages together for the `gravwell` binary.

pub mod bias;
pub mod config;
mod error;
pub mod gravity;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod scoring;

pub use error::{Error, Result};
