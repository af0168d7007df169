//! Trained ensemble, prediction and JSON persistence.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::tree::{Tree, TreeRecord};
use super::{sigmoid, GbdtError, Hyperparams};
use crate::features::{FEATURE_NAMES, NUM_FEATURES};

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub trained_on: String,
    pub train_start: Option<DateTime<Utc>>,
    pub train_end: Option<DateTime<Utc>>,
    pub train_rows: usize,
    pub label_definition: String,
    pub horizon_h: u32,
    /// Positive-class weight actually used during training.
    pub scale_pos_weight: f64,
}

impl Default for ModelMetadata {
    fn default() -> Self {
        Self {
            trained_on: String::new(),
            train_start: None,
            train_end: None,
            train_rows: 0,
            label_definition: String::new(),
            horizon_h: 2,
            scale_pos_weight: 1.0,
        }
    }
}

/// `margin(x) = base_margin + Σ tree(x)`, `probability = sigmoid(margin)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    pub base_margin: f64,
    trees: Vec<Tree>,
    pub hyperparams: Hyperparams,
    pub metadata: ModelMetadata,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u64,
    base_margin: f64,
    schema: Vec<String>,
    hyperparams: Hyperparams,
    trees: Vec<TreeRecord>,
    metadata: ModelMetadata,
}

impl GbdtModel {
    pub fn new(base_margin: f64, trees: Vec<Tree>, hyperparams: Hyperparams, metadata: ModelMetadata) -> Self {
        Self { base_margin, trees, hyperparams, metadata }
    }

    /// A model around hand-built trees, with default hyperparameters and
    /// metadata.
    pub fn from_trees(trees: Vec<Tree>) -> Self {
        Self::new(0.0, trees, Hyperparams::default(), ModelMetadata::default())
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    fn check_input(x: &[f64]) -> Result<(), GbdtError> {
        if x.len() != NUM_FEATURES {
            return Err(GbdtError::SchemaMismatch(format!(
                "input has {} values, model expects {NUM_FEATURES}",
                x.len()
            )));
        }
        match x.iter().position(|v| !v.is_finite()) {
            Some(j) => Err(GbdtError::MissingValue(j)),
            None => Ok(()),
        }
    }

    /// Raw margin (log-odds). Inputs must be complete and in schema order.
    pub fn predict_margin(&self, x: &[f64]) -> Result<f64, GbdtError> {
        Self::check_input(x)?;
        Ok(self.margin_unchecked(x))
    }

    pub(crate) fn margin_unchecked(&self, x: &[f64]) -> f64 {
        self.trees.iter().fold(self.base_margin, |m, t| m + t.predict(x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, GbdtError> {
        self.predict_margin(x).map(sigmoid)
    }

    /// Probabilities for many rows.
    pub fn predict_proba_rows(&self, rows: &[[f64; NUM_FEATURES]]) -> Result<Vec<f64>, GbdtError> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            base_margin: self.base_margin,
            schema: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            hyperparams: self.hyperparams.clone(),
            trees: self.trees.iter().map(TreeRecord::from).collect(),
            metadata: self.metadata.clone(),
        };
        serde_json::to_string(&file).expect("model serializes") + "\n"
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, GbdtError> {
        let corrupt = |msg: String| GbdtError::CorruptModelFile(msg);
        let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
        let version = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| corrupt("missing version".into()))?;
        if version != MODEL_FORMAT_VERSION {
            return Err(GbdtError::VersionMismatch { found: version, expected: MODEL_FORMAT_VERSION });
        }
        let file: ModelFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
        if file.schema.len() != NUM_FEATURES || file.schema.iter().zip(FEATURE_NAMES).any(|(a, b)| a != b) {
            return Err(GbdtError::SchemaMismatch("feature schema differs from this build".into()));
        }
        let trees = file
            .trees
            .into_iter()
            .enumerate()
            .map(|(k, t)| {
                let tree = Tree::try_from(t).map_err(|e| corrupt(format!("tree {k}: {e}")))?;
                match tree.max_feature() {
                    Some(f) if f >= NUM_FEATURES => Err(corrupt(format!("tree {k} splits on feature {f}"))),
                    _ => Ok(tree),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { base_margin: file.base_margin, trees, hyperparams: file.hyperparams, metadata: file.metadata })
    }

    pub fn save(&self, path: &Path) -> Result<(), GbdtError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GbdtError> {
        Self::from_json(&std::fs::read(path)?)
    }
}
