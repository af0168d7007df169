use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{FeatureDataset, FeatureError, FeatureRow, NUM_FEATURES};

/// Columns whose population standard deviation falls below this are treated
/// as constant and get a unit divisor.
pub const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedOn {
    pub site: String,
    pub start: Option<DateTime<Utc>>,
    pub end: Option<DateTime<Utc>>,
    pub rows: usize,
}

/// Per-feature mean and standard deviation from the training partition.
/// File form: `{means: [19], stds: [19], fitted_on}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub fitted_on: FittedOn,
}

impl ScalerStats {
    fn check(&self) -> Result<(), FeatureError> {
        if self.means.len() != NUM_FEATURES || self.stds.len() != NUM_FEATURES {
            return Err(FeatureError::SchemaMismatch(format!(
                "scaler has {} means and {} stds, expected {NUM_FEATURES}",
                self.means.len(),
                self.stds.len()
            )));
        }
        if self.stds.iter().any(|s| !(*s > 0.0)) {
            return Err(FeatureError::Malformed("scaler std must be positive".into()));
        }
        Ok(())
    }

    pub fn transform_row(&self, x: &FeatureRow) -> FeatureRow {
        std::array::from_fn(|j| (x[j] - self.means[j]) / self.stds[j])
    }

    pub fn inverse_transform_row(&self, z: &FeatureRow) -> FeatureRow {
        std::array::from_fn(|j| z[j] * self.stds[j] + self.means[j])
    }

    pub fn to_json(&self) -> Result<String, FeatureError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let stats: ScalerStats = serde_json::from_str(text)?;
        stats.check()?;
        Ok(stats)
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Population mean and standard deviation per column.
pub fn fit_scaler(train: &FeatureDataset) -> Result<ScalerStats, FeatureError> {
    if train.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let n = train.len() as f64;
    let mut means = vec![0.0; NUM_FEATURES];
    for row in train.rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut stds = vec![0.0; NUM_FEATURES];
    for row in train.rows() {
        for j in 0..NUM_FEATURES {
            stds[j] += (row[j] - means[j]).powi(2);
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt();
        if *s < DEGENERATE_STD {
            *s = 1.0;
        }
    }
    let ts = train.timestamps();
    Ok(ScalerStats {
        means,
        stds,
        fitted_on: FittedOn {
            site: train.site.icao.clone(),
            start: ts.first().copied(),
            end: ts.last().copied(),
            rows: train.len(),
        },
    })
}

/// `(x - mean) / std` column-wise. The statistics are not modified.
pub fn apply_scaler(stats: &ScalerStats, ds: &FeatureDataset) -> Result<FeatureDataset, FeatureError> {
    stats.check()?;
    if ds.scaled {
        return Err(FeatureError::SchemaMismatch("dataset is already scaled".into()));
    }
    let rows = ds.rows().iter().map(|r| stats.transform_row(r)).collect();
    Ok(ds.with_rows(rows, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SiteMeta;
    use chrono::{TimeDelta, TimeZone};

    fn dataset(rows: Vec<FeatureRow>) -> FeatureDataset {
        let start = Utc.with_ymd_and_hms(2002, 1, 1, 0, 0, 0).unwrap();
        let ts = (0..rows.len()).map(|k| start + TimeDelta::hours(k as i64)).collect();
        let n = rows.len();
        let site = SiteMeta { icao: "SCEL".into(), lat_deg: 0.0, lon_deg: 0.0, elevation_m: 0.0 };
        FeatureDataset::new(site, 2, false, ts, rows, vec![0; n]).unwrap()
    }

    #[test]
    fn two_point_and_constant_columns() {
        let mut a = [5.0; NUM_FEATURES];
        let mut b = [5.0; NUM_FEATURES];
        a[0] = 1.0;
        b[0] = 3.0;
        let stats = fit_scaler(&dataset(vec![a, b])).unwrap();
        assert_eq!(stats.means[0], 2.0);
        assert_eq!(stats.stds[0], 1.0);
        assert_eq!(stats.means[1], 5.0);
        assert_eq!(stats.stds[1], 1.0);
        let z = stats.transform_row(&a);
        assert_eq!(z[1], 0.0);
        assert_eq!(z[0], -1.0);
    }

    #[test]
    fn mean_row_maps_to_zero() {
        let rows: Vec<FeatureRow> = (0..10).map(|k| std::array::from_fn(|j| (k * j) as f64 + 0.5)).collect();
        let stats = fit_scaler(&dataset(rows)).unwrap();
        let mean: FeatureRow = std::array::from_fn(|j| stats.means[j]);
        assert!(stats.transform_row(&mean).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn empty_and_mismatched() {
        assert!(matches!(fit_scaler(&dataset(vec![])), Err(FeatureError::EmptyDataset)));
        let mut stats = fit_scaler(&dataset(vec![[1.0; NUM_FEATURES]])).unwrap();
        stats.means.pop();
        assert!(matches!(
            apply_scaler(&stats, &dataset(vec![[1.0; NUM_FEATURES]])),
            Err(FeatureError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let rows: Vec<FeatureRow> = (0..7).map(|k| std::array::from_fn(|j| (k as f64 * 0.37).sin() + j as f64)).collect();
        let stats = fit_scaler(&dataset(rows)).unwrap();
        assert_eq!(ScalerStats::from_json(&stats.to_json().unwrap()).unwrap(), stats);
    }
}
