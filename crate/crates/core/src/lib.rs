//! Coordinate-free, physics-informed airport fog nowcasting.
//!
//! The crate covers the whole pipeline: surface observation and reanalysis
//! ingestion ([`ingest`]), solar geometry ([`solar`]), the 19-feature
//! physics set with leakage-proof scaling ([`features`]), second-order
//! gradient-boosted trees ([`gbdt`]), exact path-dependent TreeSHAP
//! ([`explain`]), imbalance-aware evaluation with baselines ([`eval`]) and
//! the experiment runner used by the `fogcast` binary ([`experiment`]).

// Negated comparisons below are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eval;
pub mod experiment;
pub mod explain;
pub mod features;
pub mod gbdt;
pub mod ingest;
pub mod solar;

pub use features::{FeatureDataset, ScalerStats, FEATURE_NAMES, NUM_FEATURES};
pub use gbdt::{GbdtModel, Hyperparams};
pub use ingest::{SiteMeta, SiteSeries};
