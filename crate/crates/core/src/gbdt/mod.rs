//! Second-order gradient-boosted decision trees for class-weighted binary
//! logistic loss, with exact greedy split finding.

mod model;
mod split;
mod train;
mod tree;

pub use model::{GbdtModel, ModelMetadata, MODEL_FORMAT_VERSION};
pub use split::{find_best_split, split_gain, SplitCandidate, SplitParams};
pub use train::{gradients, train_gbdt, train_gbdt_traced, weighted_log_loss};
pub use tree::{Node, NodeKind, Tree};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GbdtError {
    #[error("labels need at least one positive and one negative sample")]
    DegenerateLabels,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("input has a missing or non-finite value at feature {0}")]
    MissingValue(usize),
    #[error("corrupt model file: {0}")]
    CorruptModelFile(String),
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Boosting configuration. Defaults follow the published training setup
/// where one exists; `reg_lambda`, `gamma` and `min_child_weight` use the
/// usual library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub subsample: f64,
    pub colsample_bytree: f64,
    /// `None` derives the negative/positive ratio from the training labels.
    pub scale_pos_weight: Option<f64>,
    pub reg_lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            n_estimators: 1000,
            learning_rate: 0.05,
            max_depth: 5,
            subsample: 0.8,
            colsample_bytree: 0.8,
            scale_pos_weight: None,
            reg_lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), GbdtError> {
        let bad = |msg: &str| Err(GbdtError::InvalidHyperparams(msg.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        if !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0) {
            return bad("colsample_bytree must be in (0, 1]");
        }
        if let Some(w) = self.scale_pos_weight {
            if !(w > 0.0 && w.is_finite()) {
                return bad("scale_pos_weight must be positive");
            }
        }
        if !(self.reg_lambda >= 0.0) || !(self.gamma >= 0.0) || !(self.min_child_weight >= 0.0) {
            return bad("reg_lambda, gamma and min_child_weight must be non-negative");
        }
        Ok(())
    }
}

/// Ratio of negative to positive labels.
pub fn compute_scale_pos_weight(labels: &[u8]) -> Result<f64, GbdtError> {
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(GbdtError::DegenerateLabels);
    }
    Ok(negatives as f64 / positives as f64)
}

pub fn sigmoid(margin: f64) -> f64 {
    1.0 / (1.0 + (-margin).exp())
}
