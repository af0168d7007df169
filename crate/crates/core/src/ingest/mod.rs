//! Surface observation and reanalysis ingestion.
//!
//! Everything leaving this module is in canonical units: °C, hPa, m/s, km
//! and cloud fraction in `[0, 1]`.

mod asos;
mod era5;
mod grid;
mod metar;
mod series;

pub use asos::load_asos_csv;
pub use era5::{load_era5_csv, Era5Record};
pub use grid::{haversine_km, nearest_grid_point, GridPoint, EARTH_RADIUS_KM};
pub use metar::{load_metar_text, parse_metar, MetarRecord, RejectReason};
pub use series::{build_hourly_series, Atmosphere, SeriesRow, SiteMeta, SiteSeries};

use thiserror::Error;

/// Statute mile in kilometres.
pub const KM_PER_STATUTE_MILE: f64 = 1.609344;
/// Knot in metres per second.
pub const MPS_PER_KNOT: f64 = 0.514444;
/// Inch of mercury in hectopascals.
pub const HPA_PER_INHG: f64 = 33.86389;

pub fn fahrenheit_to_celsius(f: f64) -> f64 {
    (f - 32.0) * 5.0 / 9.0
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed report ({reason}): {text}")]
    MalformedReport { reason: RejectReason, text: String },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("timestamps not strictly increasing at data row {row}: {timestamp}")]
    NonMonotonicTime { row: usize, timestamp: String },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("observation and reanalysis time ranges do not overlap")]
    NoOverlap,
    #[error("no usable visibility observation inside the overlap window")]
    NoVisibility,
    #[error("invalid site metadata: {0}")]
    InvalidSite(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A non-fatal problem with one data row of a columnar file. The row is
/// skipped and loading continues.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based data row number (header excluded).
    pub row: usize,
    pub reason: String,
}

/// Records loaded from a columnar file together with the rows that were
/// skipped.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub row_errors: Vec<RowError>,
}

/// Parses a numeric cell. Archive sentinels (`M`, `T`, empty) and any other
/// non-convertible text become `None`.
pub(crate) fn numeric_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        _ => None,
    }
}
