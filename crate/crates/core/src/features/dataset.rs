use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{FeatureError, FEATURE_NAMES, NUM_FEATURES, SCHEMA_VERSION};
use crate::ingest::SiteMeta;

pub type FeatureRow = [f64; NUM_FEATURES];

/// Timestamp-indexed feature matrix with its binary fog label.
///
/// `labels[i] == 1` means fog at `timestamps[i] + horizon_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    pub site: SiteMeta,
    pub horizon_h: u32,
    /// True once standardization has been applied.
    pub scaled: bool,
    timestamps: Vec<DateTime<Utc>>,
    rows: Vec<FeatureRow>,
    labels: Vec<u8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    site: SiteMeta,
    horizon_h: u32,
    schema_version: String,
    #[serde(default)]
    scaled: bool,
}

impl FeatureDataset {
    pub fn new(
        site: SiteMeta,
        horizon_h: u32,
        scaled: bool,
        timestamps: Vec<DateTime<Utc>>,
        rows: Vec<FeatureRow>,
        labels: Vec<u8>,
    ) -> Result<Self, FeatureError> {
        if timestamps.len() != rows.len() || rows.len() != labels.len() {
            return Err(FeatureError::SchemaMismatch(format!(
                "{} timestamps, {} rows, {} labels",
                timestamps.len(),
                rows.len(),
                labels.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(FeatureError::Malformed(format!("non-finite feature in row {i}")));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(FeatureError::Malformed("labels must be 0 or 1".into()));
        }
        Ok(Self { site, horizon_h, scaled, timestamps, rows, labels })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn base_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.labels.iter().map(|&y| y as f64).sum::<f64>() / self.len() as f64
    }

    /// Rows whose index satisfies `keep`, in original order.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        Self {
            site: self.site.clone(),
            horizon_h: self.horizon_h,
            scaled: self.scaled,
            timestamps: idx.iter().map(|&i| self.timestamps[i]).collect(),
            rows: idx.iter().map(|&i| self.rows[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub(crate) fn with_rows(&self, rows: Vec<FeatureRow>, scaled: bool) -> Self {
        Self { rows, scaled, ..self.clone() }
    }

    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        let mut name = csv_path.as_os_str().to_owned();
        name.push(".meta.json");
        PathBuf::from(name)
    }

    /// Writes `timestamp, <19 features>, label` plus the metadata sidecar
    /// next to it (`<file>.meta.json`).
    pub fn write_csv(&self, path: &Path) -> Result<(), FeatureError> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["timestamp"];
        header.extend(FEATURE_NAMES);
        header.push("label");
        w.write_record(&header)?;
        for ((ts, row), y) in self.timestamps.iter().zip(&self.rows).zip(&self.labels) {
            let mut rec = Vec::with_capacity(NUM_FEATURES + 2);
            rec.push(ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
            rec.extend(row.iter().map(|v| v.to_string()));
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        let sidecar = Sidecar {
            site: self.site.clone(),
            horizon_h: self.horizon_h,
            schema_version: SCHEMA_VERSION.to_string(),
            scaled: self.scaled,
        };
        let mut f = std::fs::File::create(Self::sidecar_path(path))?;
        serde_json::to_writer_pretty(&mut f, &sidecar)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, FeatureError> {
        let sidecar: Sidecar = serde_json::from_slice(&std::fs::read(Self::sidecar_path(path))?)?;
        if sidecar.schema_version != SCHEMA_VERSION {
            return Err(FeatureError::SchemaMismatch(format!(
                "schema version {} (expected {SCHEMA_VERSION})",
                sidecar.schema_version
            )));
        }
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let expected: Vec<&str> = std::iter::once("timestamp")
            .chain(FEATURE_NAMES)
            .chain(std::iter::once("label"))
            .collect();
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(FeatureError::SchemaMismatch("column header differs from the feature schema".into()));
        }
        let mut timestamps = Vec::new();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| FeatureError::Malformed(format!("row {}: {what}", i + 1));
            let ts = DateTime::parse_from_rfc3339(&rec[0]).map_err(|_| bad("timestamp"))?;
            let mut row = [0.0; NUM_FEATURES];
            for (j, v) in row.iter_mut().enumerate() {
                *v = rec[j + 1].parse().map_err(|_| bad(FEATURE_NAMES[j]))?;
            }
            timestamps.push(ts.with_timezone(&Utc));
            rows.push(row);
            labels.push(rec[NUM_FEATURES + 1].parse().map_err(|_| bad("label"))?);
        }
        Self::new(sidecar.site, sidecar.horizon_h, sidecar.scaled, timestamps, rows, labels)
    }
}

/// Half-open UTC interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeRange {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn overlaps(&self, other: &TimeRange) -> bool {
        !self.is_empty() && !other.is_empty() && self.start < other.end && other.start < self.end
    }
}

/// Partitions rows by timestamp into the train and test ranges, keeping
/// chronological order. Rows in neither range are dropped.
pub fn split_by_period(
    ds: &FeatureDataset,
    train: TimeRange,
    test: TimeRange,
) -> Result<(FeatureDataset, FeatureDataset), FeatureError> {
    if train.overlaps(&test) {
        return Err(FeatureError::OverlappingRanges);
    }
    let ts = ds.timestamps();
    Ok((ds.filter_rows(|i| train.contains(ts[i])), ds.filter_rows(|i| test.contains(ts[i]))))
}
