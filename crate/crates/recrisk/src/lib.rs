//! Post-hoc risk control for recommender systems.
//!
//! Any recommender that emits relevance scores can be wrapped by this crate
//! to provably bound, in expectation, the fraction of recommended items the
//! user will flag as unwanted. The bound is distribution-free: a held-out
//! calibration set turns a user-chosen risk level alpha into a score
//! threshold, items below the threshold are filtered, and (optionally)
//! previously consumed, never-flagged items with high watch fractions are
//! recommended in their place so the list does not shrink.
//!
//! The crate also ships the tooling needed to validate the guarantee
//! offline: log ingestion and splitting ([`data`]), a pluggable scorer with
//! a latent-factor baseline ([`ranker`]), risk/utility metrics
//! ([`metrics`]), a synthetic behavioral model with exact oracles
//! ([`simulate`]), descriptive analyses of reporting behavior ([`analyze`])
//! and a sweep runner with CSV/SVG outputs ([`experiment`], [`plot`]).
//!
//! See the `examples/` directory for one runnable walk-through per
//! capability; `recrisk --help` exposes the same steps as a command line.

pub mod analyze;
pub mod calibration;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod plot;
pub mod ranker;
pub mod selection;
pub mod simulate;

pub use data::{ColumnSchema, DatasetSplit, InteractionRecord, ItemId, UserId};
pub use error::{Error, Result};
pub use selection::{RecommendationSet, SafePool, Strategy};
