use serde::{Deserialize, Serialize};

use super::EvalError;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub(crate) fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    if scores.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    if let Some(i) = labels.iter().position(|&y| y > 1) {
        return Err(EvalError::InvalidLabel(i));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    Ok((pos, labels.len() - pos))
}

/// Groups of equal scores in descending score order, each as
/// `(score, positives, negatives)`.
pub(crate) fn descending_blocks(scores: &[f64], labels: &[u8]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut blocks: Vec<(f64, usize, usize)> = Vec::new();
    for i in order {
        let s = scores[i];
        match blocks.last_mut() {
            Some(last) if last.0 == s => {}
            _ => blocks.push((s, 0, 0)),
        }
        let last = blocks.last_mut().expect("block pushed above");
        if labels[i] == 1 {
            last.1 += 1;
        } else {
            last.2 += 1;
        }
    }
    blocks
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    let (pos, neg) = check_inputs(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    // Twice the Mann-Whitney U, accumulated exactly.
    let mut twice_u: u128 = 0;
    let mut neg_below = neg as u128;
    for (_, p, n) in descending_blocks(scores, labels) {
        neg_below -= n as u128;
        twice_u += p as u128 * (2 * neg_below + n as u128);
    }
    Ok(twice_u as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Step-wise area under the precision-recall curve, tied scores entering
/// as one step.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    let (pos, _) = check_inputs(scores, labels)?;
    if pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    for (_, p, n) in descending_blocks(scores, labels) {
        tp += p;
        fp += n;
        if p > 0 {
            ap += (p as f64 / pos as f64) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn at_threshold(scores: &[f64], labels: &[u8], threshold: f64) -> Self {
        let mut c = Self::default();
        for (&s, &y) in scores.iter().zip(labels) {
            match (s >= threshold, y == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall, 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Matthews correlation, 0 when any marginal is empty.
    pub fn mcc(&self) -> f64 {
        let (tp, fp, tn, fn_) = (self.tp as f64, self.fp as f64, self.tn as f64, self.fn_ as f64);
        let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
        if factors.contains(&0.0) {
            return 0.0;
        }
        (tp * tn - fp * fn_) / factors.iter().product::<f64>().sqrt()
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Smallest score predicted positive at this point; `None` for the
    /// origin.
    pub threshold: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// ROC and precision-recall step curves, thresholds descending.
pub fn curves(scores: &[f64], labels: &[u8]) -> Result<(Vec<RocPoint>, Vec<PrPoint>), EvalError> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut roc = vec![RocPoint { threshold: None, fpr: 0.0, tpr: 0.0 }];
    let mut pr = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    for (s, p, n) in descending_blocks(scores, labels) {
        tp += p;
        fp += n;
        roc.push(RocPoint { threshold: Some(s), fpr: ratio(fp, neg), tpr: ratio(tp, pos) });
        pr.push(PrPoint { threshold: s, recall: ratio(tp, pos), precision: ratio(tp, tp + fp) });
    }
    Ok((roc, pr))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
    /// `None` when there are no positives.
    pub auprc: Option<f64>,
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
    pub confusion: Confusion,
    pub base_rate: f64,
    pub roc_points: Vec<RocPoint>,
    pub pr_points: Vec<PrPoint>,
}

/// Thresholded metrics (`score ≥ threshold` is positive) together with the
/// ranking metrics and curves.
pub fn classification_report(scores: &[f64], labels: &[u8], threshold: f64) -> Result<EvalReport, EvalError> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let confusion = Confusion::at_threshold(scores, labels, threshold);
    let (roc_points, pr_points) = curves(scores, labels)?;
    Ok(EvalReport {
        n: scores.len(),
        auc: if pos > 0 && neg > 0 { Some(roc_auc(scores, labels)?) } else { None },
        auprc: if pos > 0 { Some(average_precision(scores, labels)?) } else { None },
        threshold,
        precision: confusion.precision(),
        recall: confusion.recall(),
        f1: confusion.f1(),
        mcc: confusion.mcc(),
        confusion,
        base_rate: pos as f64 / scores.len() as f64,
        roc_points,
        pr_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "objective", content = "recall", rename_all = "snake_case")]
pub enum CalibrationObjective {
    MaxF1,
    MinRecall(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub objective: CalibrationObjective,
    pub threshold: f64,
    pub report: EvalReport,
}

/// Chooses a decision threshold among the distinct scores. `MaxF1` keeps
/// the highest threshold among F1 ties; `MinRecall(r)` returns the highest
/// threshold whose recall reaches `r`.
pub fn calibrate_threshold(
    scores: &[f64],
    labels: &[u8],
    objective: CalibrationObjective,
) -> Result<Calibration, EvalError> {
    let (pos, neg) = check_inputs(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut chosen: Option<(f64, f64)> = None;
    let mut c = Confusion { tp: 0, fp: 0, tn: neg, fn_: pos };
    for (s, p, n) in descending_blocks(scores, labels) {
        c.tp += p;
        c.fn_ -= p;
        c.fp += n;
        c.tn -= n;
        match objective {
            CalibrationObjective::MaxF1 => {
                let f1 = c.f1();
                if chosen.is_none_or(|(_, best)| f1 > best) {
                    chosen = Some((s, f1));
                }
            }
            CalibrationObjective::MinRecall(r) => {
                if c.recall() >= r {
                    chosen = Some((s, c.recall()));
                    break;
                }
            }
        }
    }
    let (threshold, _) = match (chosen, objective) {
        (Some(c), _) => c,
        (None, CalibrationObjective::MinRecall(r)) => return Err(EvalError::UnachievableRecall(r)),
        (None, CalibrationObjective::MaxF1) => unreachable!("at least one block exists"),
    };
    Ok(Calibration { objective, threshold, report: classification_report(scores, labels, threshold)? })
}
