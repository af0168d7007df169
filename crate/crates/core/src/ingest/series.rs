//! Merging observations and reanalysis onto a contiguous hourly grid.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, DurationRound, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use super::{Era5Record, IngestError, MetarRecord};

/// Site metadata file: `{icao, lat_deg, lon_deg, elevation_m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteMeta {
    pub icao: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub elevation_m: f64,
}

impl SiteMeta {
    pub fn validate(&self) -> Result<(), IngestError> {
        if !(-90.0..=90.0).contains(&self.lat_deg) {
            return Err(IngestError::InvalidSite(format!("latitude {}", self.lat_deg)));
        }
        if !(-180.0..=180.0).contains(&self.lon_deg) {
            return Err(IngestError::InvalidSite(format!("longitude {}", self.lon_deg)));
        }
        if self.icao.trim().is_empty() {
            return Err(IngestError::InvalidSite("empty icao".into()));
        }
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let meta: SiteMeta = serde_json::from_slice(&std::fs::read(path)?)?;
        meta.validate()?;
        Ok(meta)
    }
}

/// Reanalysis predictors for one hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atmosphere {
    pub t2m_c: f64,
    pub d2m_c: f64,
    pub ws10_mps: f64,
    pub sp_hpa: f64,
    pub lcc_frac: f64,
    pub t950_c: f64,
}

impl From<&Era5Record> for Atmosphere {
    fn from(r: &Era5Record) -> Self {
        Self {
            t2m_c: r.t2m_c,
            d2m_c: r.d2m_c,
            ws10_mps: r.ws10_mps,
            sp_hpa: r.sp_hpa,
            lcc_frac: r.lcc_frac,
            t950_c: r.t950_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub timestamp: DateTime<Utc>,
    /// Filled visibility (km).
    pub visibility_km: f64,
    /// `None` where the reanalysis export has a gap.
    pub atmosphere: Option<Atmosphere>,
    /// True only for hours with a genuine report.
    pub metar_reported: bool,
}

/// Hourly, UTC-aligned record stream for one site. Rows always form a
/// contiguous grid with one-hour steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSeries {
    pub site: SiteMeta,
    rows: Vec<SeriesRow>,
}

impl SiteSeries {
    /// Checks the grid and visibility invariants.
    pub fn new(site: SiteMeta, rows: Vec<SeriesRow>) -> Result<Self, IngestError> {
        for pair in rows.windows(2) {
            if pair[1].timestamp - pair[0].timestamp != TimeDelta::hours(1) {
                return Err(IngestError::NonMonotonicTime {
                    row: 0,
                    timestamp: pair[1].timestamp.to_rfc3339(),
                });
            }
        }
        if let Some(r) = rows.iter().find(|r| !(r.visibility_km >= 0.0)) {
            return Err(IngestError::InvalidSite(format!(
                "visibility {} at {}",
                r.visibility_km, r.timestamp
            )));
        }
        Ok(Self { site, rows })
    }

    pub fn rows(&self) -> &[SeriesRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn floor_hour(ts: DateTime<Utc>) -> DateTime<Utc> {
    ts.duration_trunc(TimeDelta::hours(1)).expect("hour truncation is in range")
}

/// Builds the hourly series over the time overlap of both inputs.
///
/// Reports with negative visibility are discarded first. Within an hour
/// the earliest report wins. Visibility gaps are forward-filled, then any
/// leading gap is back-filled from the first observation. Reanalysis rows
/// are matched on the hour they fall in.
pub fn build_hourly_series(
    metars: &[MetarRecord],
    era5: &[Era5Record],
    site: SiteMeta,
) -> Result<SiteSeries, IngestError> {
    let mut usable: Vec<&MetarRecord> = metars
        .iter()
        .filter(|m| m.visibility_km.is_none_or(|v| v >= 0.0))
        .collect();
    usable.sort_by_key(|m| m.timestamp);

    let mut reports: BTreeMap<DateTime<Utc>, &MetarRecord> = BTreeMap::new();
    for m in usable {
        reports.entry(floor_hour(m.timestamp)).or_insert(m);
    }
    let atmos: BTreeMap<DateTime<Utc>, Atmosphere> =
        era5.iter().map(|r| (floor_hour(r.timestamp), Atmosphere::from(r))).collect();

    let (Some((&m_first, _)), Some((&m_last, _))) = (reports.first_key_value(), reports.last_key_value())
    else {
        return Err(IngestError::NoOverlap);
    };
    let (Some((&e_first, _)), Some((&e_last, _))) = (atmos.first_key_value(), atmos.last_key_value())
    else {
        return Err(IngestError::NoOverlap);
    };
    let start = m_first.max(e_first);
    let end = m_last.min(e_last);
    if start > end {
        return Err(IngestError::NoOverlap);
    }

    let hours = ((end - start).num_hours() + 1) as usize;
    let mut observed: Vec<Option<f64>> = Vec::with_capacity(hours);
    let mut rows = Vec::with_capacity(hours);
    for k in 0..hours {
        let ts = start + TimeDelta::hours(k as i64);
        let report = reports.get(&ts);
        observed.push(report.and_then(|m| m.visibility_km));
        rows.push(SeriesRow {
            timestamp: ts,
            visibility_km: f64::NAN,
            atmosphere: atmos.get(&ts).copied(),
            metar_reported: report.is_some(),
        });
    }

    let first_valid = observed.iter().flatten().next().copied().ok_or(IngestError::NoVisibility)?;
    let mut carry = first_valid;
    for (row, obs) in rows.iter_mut().zip(&observed) {
        if let Some(v) = obs {
            carry = *v;
        }
        row.visibility_km = carry;
    }
    SiteSeries::new(site, rows)
}
