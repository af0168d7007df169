//! SHAP attributions for the boosted ensemble, in margin (log-odds) space.

mod brute;
mod leaf_tables;
mod treeshap;

use leaf_tables::TreeTables;

use treeshap::ShapWorkspace;

pub use brute::{brute_force_shap, MAX_BRUTE_FORCE_FEATURES};

use std::io::Write;

use chrono::{DateTime, SecondsFormat, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureDataset, FEATURE_NAMES, NUM_FEATURES};
use crate::gbdt::{GbdtError, GbdtModel, NodeKind, Tree};

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("tree {tree} node {node} has non-positive cover")]
    ZeroCoverNode { tree: usize, node: usize },
    #[error("tree uses {0} distinct features, too many to enumerate")]
    TooManyFeatures(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Model(#[from] GbdtError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    /// Expected margin under the cover-weighted training distribution.
    pub base_value: f64,
    pub values: [f64; NUM_FEATURES],
    pub margin: f64,
}

impl ShapExplanation {
    /// `|base_value + Σ values − margin|`.
    pub fn additivity_error(&self) -> f64 {
        (self.base_value + self.values.iter().sum::<f64>() - self.margin).abs()
    }
}

fn check_covers(k: usize, tree: &Tree) -> Result<(), ExplainError> {
    match tree.nodes().iter().position(|n| !(n.cover > 0.0 && n.cover.is_finite())) {
        Some(node) if tree.nodes().len() > 1 => Err(ExplainError::ZeroCoverNode { tree: k, node }),
        _ => Ok(()),
    }
}

/// SHAP values of a single tree at `x` (one entry per input column).
///
/// Every node of a tree with splits must have positive cover.
pub fn tree_shap(tree: &Tree, x: &[f64]) -> Result<Vec<f64>, ExplainError> {
    check_covers(0, tree)?;
    if let Some(f) = tree.max_feature().filter(|&f| f >= x.len()) {
        return Err(ExplainError::SchemaMismatch(format!("tree uses feature {f}, input has {}", x.len())));
    }
    let mut phi = vec![0.0; x.len()];
    treeshap::tree_shap_into(&mut ShapWorkspace::new(tree.depth()), tree, x, &mut phi);
    Ok(phi)
}

const ROW_BLOCK: usize = 512;

/// Validated view of a model that can explain many rows.
#[derive(Debug, Clone)]
pub struct TreeExplainer<'a> {
    model: &'a GbdtModel,
    base_value: f64,
    max_depth: usize,
    /// Per-tree lookup tables; `None` entries use the recursion.
    tables: Vec<Option<TreeTables>>,
}

impl<'a> TreeExplainer<'a> {
    pub fn new(model: &'a GbdtModel) -> Result<Self, ExplainError> {
        for (k, tree) in model.trees().iter().enumerate() {
            check_covers(k, tree)?;
        }
        let base_value = model.trees().iter().fold(model.base_margin, |acc, t| acc + t.expected_value());
        let max_depth = model.trees().iter().map(Tree::depth).max().unwrap_or(0);
        let tables = model.trees().iter().map(TreeTables::build).collect();
        Ok(Self { model, base_value, max_depth, tables })
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn explain(&self, x: &[f64]) -> Result<ShapExplanation, ExplainError> {
        Ok(self.explain_rows(std::slice::from_ref(&x))?.remove(0))
    }

    /// Trees in the outer loop so each tree's tables stay in cache while a
    /// block of rows is processed.
    fn explain_rows<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<ShapExplanation>, ExplainError> {
        let mut out = rows
            .iter()
            .map(|x| {
                let margin = self.model.predict_margin(x.as_ref())?;
                Ok(ShapExplanation { base_value: self.base_value, values: [0.0; NUM_FEATURES], margin })
            })
            .collect::<Result<Vec<_>, ExplainError>>()?;
        let mut ws = ShapWorkspace::new(self.max_depth);
        for (tree, table) in self.model.trees().iter().zip(&self.tables) {
            if tree.nodes().len() <= 1 {
                continue;
            }
            for (x, e) in rows.iter().zip(out.iter_mut()) {
                match table {
                    Some(t) => t.shap_into(x.as_ref(), &mut e.values),
                    None => treeshap::tree_shap_into(&mut ws, tree, x.as_ref(), &mut e.values),
                }
            }
        }
        Ok(out)
    }

    /// Explanations for every row of `ds`, in row order.
    pub fn explain_dataset(&self, ds: &FeatureDataset) -> Result<Vec<ShapExplanation>, ExplainError> {
        let blocks = ds
            .rows()
            .par_chunks(ROW_BLOCK)
            .map(|block| self.explain_rows(block))
            .collect::<Result<Vec<_>, ExplainError>>()?;
        Ok(blocks.into_iter().flatten().collect())
    }
}

/// Per-feature SHAP values of the whole ensemble at `x`.
pub fn shap_values(model: &GbdtModel, x: &[f64]) -> Result<ShapExplanation, ExplainError> {
    TreeExplainer::new(model)?.explain(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub index: usize,
    pub mean_abs_shap: f64,
}

/// Features sorted by mean |SHAP|, largest first; equal means keep schema
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceRanking {
    pub fn from_means(means: &[f64; NUM_FEATURES]) -> Self {
        let mut entries: Vec<ImportanceEntry> = FEATURE_NAMES
            .iter()
            .zip(means)
            .enumerate()
            .map(|(index, (name, &m))| ImportanceEntry { feature: name.to_string(), index, mean_abs_shap: m })
            .collect();
        entries.sort_by(|a, b| b.mean_abs_shap.total_cmp(&a.mean_abs_shap).then(a.index.cmp(&b.index)));
        Self { entries }
    }

    pub fn top(&self) -> &ImportanceEntry {
        &self.entries[0]
    }

    /// 1-based rank of a feature.
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature).map(|p| p + 1)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ExplainError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rank", "feature", "mean_abs_shap"])?;
        for (i, e) in self.entries.iter().enumerate() {
            out.write_record([(i + 1).to_string(), e.feature.clone(), e.mean_abs_shap.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn mean_abs(explanations: &[ShapExplanation]) -> [f64; NUM_FEATURES] {
    let mut sums = [0.0; NUM_FEATURES];
    for e in explanations {
        for (s, v) in sums.iter_mut().zip(&e.values) {
            *s += v.abs();
        }
    }
    let n = explanations.len() as f64;
    sums.map(|s| s / n)
}

/// Mean absolute SHAP value per feature over every row of `ds`.
pub fn global_importance(model: &GbdtModel, ds: &FeatureDataset) -> Result<ImportanceRanking, ExplainError> {
    if ds.is_empty() {
        return Err(ExplainError::EmptyDataset);
    }
    let explanations = TreeExplainer::new(model)?.explain_dataset(ds)?;
    Ok(ImportanceRanking::from_means(&mean_abs(&explanations)))
}

/// Ranking from explanations already computed.
pub fn importance_from_explanations(explanations: &[ShapExplanation]) -> Result<ImportanceRanking, ExplainError> {
    if explanations.is_empty() {
        return Err(ExplainError::EmptyDataset);
    }
    Ok(ImportanceRanking::from_means(&mean_abs(explanations)))
}

/// Writes `timestamp, base_value, <19 features>, margin`.
pub fn write_explanations_csv<W: Write>(
    w: W,
    timestamps: &[DateTime<Utc>],
    explanations: &[ShapExplanation],
) -> Result<(), ExplainError> {
    if timestamps.len() != explanations.len() {
        return Err(ExplainError::SchemaMismatch(format!(
            "{} timestamps for {} explanations",
            timestamps.len(),
            explanations.len()
        )));
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["timestamp", "base_value"];
    header.extend(FEATURE_NAMES);
    header.push("margin");
    out.write_record(&header)?;
    for (t, e) in timestamps.iter().zip(explanations) {
        let mut rec = Vec::with_capacity(NUM_FEATURES + 3);
        rec.push(t.to_rfc3339_opts(SecondsFormat::Secs, true));
        rec.push(e.base_value.to_string());
        rec.extend(e.values.iter().map(f64::to_string));
        rec.push(e.margin.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Distinct features the model splits on.
pub fn used_features(model: &GbdtModel) -> Vec<usize> {
    let mut used: Vec<usize> = model
        .trees()
        .iter()
        .flat_map(|t| t.nodes().iter())
        .filter_map(|n| match n.kind {
            NodeKind::Split { feature, .. } => Some(feature),
            NodeKind::Leaf { .. } => None,
        })
        .collect();
    used.sort_unstable();
    used.dedup();
    used
}
