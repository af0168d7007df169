//! Ranking and thresholded metrics for imbalanced binary forecasts,
//! threshold calibration and the reference baselines.

mod baselines;
mod metrics;

pub use baselines::{
    climatology_baseline, logistic_design, logistic_gradient, logistic_loss, persistence_baseline, train_logistic,
    ClimatologyTable, LinearModel, LogisticConfig, PersistenceScores, LOGISTIC_FEATURES,
};
pub use metrics::{
    average_precision, calibrate_threshold, classification_report, curves, roc_auc, Calibration,
    CalibrationObjective, Confusion, EvalReport, PrPoint, RocPoint, DEFAULT_THRESHOLD,
};

use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("no positive samples")]
    NoPositives,
    #[error("no threshold reaches recall {0}")]
    UnachievableRecall(f64),
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("no samples")]
    EmptyInput,
    #[error("score {0} is not finite")]
    NonFiniteScore(usize),
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(usize),
    #[error("training set is empty")]
    EmptyTraining,
    #[error("training labels need both classes")]
    DegenerateLabels,
    #[error("baseline needs unscaled features")]
    ScaledInput,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Writes `fpr,tpr,threshold` rows, thresholds descending. The origin has an
/// empty threshold.
pub fn write_roc_csv<W: Write>(w: W, points: &[RocPoint]) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["fpr", "tpr", "threshold"])?;
    for p in points {
        out.write_record([p.fpr.to_string(), p.tpr.to_string(), p.threshold.map(|t| t.to_string()).unwrap_or_default()])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `recall,precision,threshold` rows, thresholds descending.
pub fn write_pr_csv<W: Write>(w: W, points: &[PrPoint]) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["recall", "precision", "threshold"])?;
    for p in points {
        out.write_record([p.recall.to_string(), p.precision.to_string(), p.threshold.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
