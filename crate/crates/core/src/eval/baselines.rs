//! Reference forecasters: persistence, month-hour climatology and a small
//! logistic regression.

use chrono::{Datelike, Duration, Timelike};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::features::{col, FeatureDataset, FOG_VISIBILITY_KM};
use crate::gbdt::{compute_scale_pos_weight, sigmoid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceScores {
    /// 1 when current visibility is below the fog threshold.
    pub binary: Vec<f64>,
    /// Negated current visibility; ranks every row.
    pub continuous: Vec<f64>,
}

/// "Fog now means fog later." Needs unscaled visibility.
pub fn persistence_baseline(ds: &FeatureDataset) -> Result<PersistenceScores, EvalError> {
    if ds.scaled {
        return Err(EvalError::ScaledInput);
    }
    let vis = ds.column(col::VISIBILIDAD_ACTUAL);
    Ok(PersistenceScores {
        binary: vis.iter().map(|&v| if v < FOG_VISIBILITY_KM { 1.0 } else { 0.0 }).collect(),
        continuous: vis.iter().map(|&v| -v).collect(),
    })
}

/// Fog frequency per (month, UTC hour) of the verifying time `t + horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimatologyTable {
    /// `rates[month - 1][hour]`; `None` where training had no rows.
    pub rates: Vec<Vec<Option<f64>>>,
    pub global_rate: f64,
    pub horizon_h: u32,
}

impl ClimatologyTable {
    pub fn fit(train: &FeatureDataset) -> Result<Self, EvalError> {
        if train.is_empty() {
            return Err(EvalError::EmptyTraining);
        }
        let mut fog = [[0usize; 24]; 12];
        let mut hours = [[0usize; 24]; 12];
        for (t, &y) in train.timestamps().iter().zip(train.labels()) {
            let (m, h) = cell(*t, train.horizon_h);
            hours[m][h] += 1;
            fog[m][h] += y as usize;
        }
        let rates = (0..12)
            .map(|m| {
                (0..24)
                    .map(|h| (hours[m][h] > 0).then(|| fog[m][h] as f64 / hours[m][h] as f64))
                    .collect()
            })
            .collect();
        Ok(Self { rates, global_rate: train.base_rate(), horizon_h: train.horizon_h })
    }

    pub fn rate(&self, month: u32, hour: u32) -> f64 {
        self.rates[month as usize - 1][hour as usize].unwrap_or(self.global_rate)
    }

    pub fn score(&self, ds: &FeatureDataset) -> Vec<f64> {
        ds.timestamps()
            .iter()
            .map(|&t| {
                let (m, h) = cell(t, self.horizon_h);
                self.rates[m][h].unwrap_or(self.global_rate)
            })
            .collect()
    }
}

fn cell(t: chrono::DateTime<chrono::Utc>, horizon_h: u32) -> (usize, usize) {
    let v = t + Duration::hours(horizon_h as i64);
    (v.month0() as usize, v.hour() as usize)
}

pub fn climatology_baseline(train: &FeatureDataset, test: &FeatureDataset) -> Result<Vec<f64>, EvalError> {
    Ok(ClimatologyTable::fit(train)?.score(test))
}

/// Columns used by the logistic baseline: temperature, dew-point
/// depression, wind, relative humidity and current visibility.
pub const LOGISTIC_FEATURES: [usize; 5] = [
    col::TEMPERATURA_2M,
    col::DEPRESION_PUNTO_ROCIO,
    col::VELOCIDAD_VIENTO_10M,
    col::HUMEDAD_RELATIVA,
    col::VISIBILIDAD_ACTUAL,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    /// Weight positives by the negative/positive ratio, like the boosted
    /// model.
    pub class_weighting: bool,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { learning_rate: 0.5, iterations: 500, class_weighting: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: [f64; 5],
    pub bias: f64,
    pub features: [usize; 5],
    pub positive_weight: f64,
}

impl LinearModel {
    pub fn score_row(&self, x: &[f64]) -> f64 {
        let z = self.features.iter().zip(&self.weights).fold(self.bias, |z, (&j, w)| z + w * x[j]);
        sigmoid(z)
    }

    pub fn score(&self, ds: &FeatureDataset) -> Vec<f64> {
        ds.rows().iter().map(|r| self.score_row(r)).collect()
    }
}

/// Design matrix of the logistic baseline: the five selected columns.
pub fn logistic_design(ds: &FeatureDataset) -> Vec<[f64; 5]> {
    ds.rows().iter().map(|r| LOGISTIC_FEATURES.map(|j| r[j])).collect()
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean class-weighted log loss at `params = [w₀..w₄, b]`.
pub fn logistic_loss(params: &[f64; 6], xs: &[[f64; 5]], ys: &[u8], positive_weight: f64) -> f64 {
    let total: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let z = linear(params, x);
            let w = if y == 1 { positive_weight } else { 1.0 };
            w * (softplus(z) - y as f64 * z)
        })
        .sum();
    total / xs.len() as f64
}

/// Gradient of [`logistic_loss`].
pub fn logistic_gradient(params: &[f64; 6], xs: &[[f64; 5]], ys: &[u8], positive_weight: f64) -> [f64; 6] {
    let mut g = [0.0; 6];
    for (x, &y) in xs.iter().zip(ys) {
        let w = if y == 1 { positive_weight } else { 1.0 };
        let r = w * (sigmoid(linear(params, x)) - y as f64);
        for k in 0..5 {
            g[k] += r * x[k];
        }
        g[5] += r;
    }
    let n = xs.len() as f64;
    g.map(|v| v / n)
}

fn linear(params: &[f64; 6], x: &[f64; 5]) -> f64 {
    params[5] + (0..5).map(|k| params[k] * x[k]).sum::<f64>()
}

/// Full-batch gradient descent from zero. `train` should be standardized.
pub fn train_logistic(train: &FeatureDataset, config: &LogisticConfig) -> Result<LinearModel, EvalError> {
    let ys = train.labels();
    let spw = compute_scale_pos_weight(ys).map_err(|_| EvalError::DegenerateLabels)?;
    let positive_weight = if config.class_weighting { spw } else { 1.0 };
    let xs = logistic_design(train);
    let mut params = [0.0; 6];
    for _ in 0..config.iterations {
        let g = logistic_gradient(&params, &xs, ys, positive_weight);
        for (p, gk) in params.iter_mut().zip(g) {
            *p -= config.learning_rate * gk;
        }
    }
    Ok(LinearModel {
        weights: [params[0], params[1], params[2], params[3], params[4]],
        bias: params[5],
        features: LOGISTIC_FEATURES,
        positive_weight,
    })
}
