//! Columnar reanalysis exports at the grid point nearest a site.

use std::io::Read;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::{numeric_cell, IngestError, Loaded, RowError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Era5Record {
    pub timestamp: DateTime<Utc>,
    pub t2m_c: f64,
    pub d2m_c: f64,
    pub ws10_mps: f64,
    pub sp_hpa: f64,
    pub lcc_frac: f64,
    pub t950_c: f64,
}

pub(crate) fn parse_utc(text: &str) -> Option<DateTime<Utc>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(text, fmt).ok())
        .map(|naive| Utc.from_utc_datetime(&naive))
}

/// Loads an export with header `time, t2m_c, d2m_c, sp_hpa, lcc_frac,
/// t950_c` plus either `ws10_mps` or the `u10_mps`/`v10_mps` pair.
///
/// Rows with missing or out-of-range values are skipped and reported.
/// Timestamps of the kept rows must be strictly increasing.
pub fn load_era5_csv<R: Read>(reader: R) -> Result<Loaded<Era5Record>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let require = |name: &str| column(name).ok_or_else(|| IngestError::MissingColumn(name.into()));
    let time_col = require("time")?;
    let t2m_col = require("t2m_c")?;
    let d2m_col = require("d2m_c")?;
    let sp_col = require("sp_hpa")?;
    let lcc_col = require("lcc_frac")?;
    let t950_col = require("t950_c")?;
    enum Wind {
        Speed(usize),
        Components(usize, usize),
    }
    let wind = match (column("ws10_mps"), column("u10_mps"), column("v10_mps")) {
        (Some(ws), _, _) => Wind::Speed(ws),
        (None, Some(u), Some(v)) => Wind::Components(u, v),
        (None, None, _) => return Err(IngestError::MissingColumn("ws10_mps".into())),
        (None, Some(_), None) => return Err(IngestError::MissingColumn("v10_mps".into())),
    };

    let mut records: Vec<Era5Record> = Vec::new();
    let mut row_errors = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row_no = idx + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                row_errors.push(RowError { row: row_no, reason: e.to_string() });
                continue;
            }
        };
        let fail = |reason: String| RowError { row: row_no, reason };
        let time_text = row.get(time_col).unwrap_or("");
        let Some(timestamp) = parse_utc(time_text) else {
            row_errors.push(fail(format!("unreadable time `{time_text}`")));
            continue;
        };
        let value = |col: usize, name: &str| {
            numeric_cell(row.get(col).unwrap_or("")).ok_or_else(|| fail(format!("missing {name}")))
        };
        let parsed = (|| {
            let ws10_mps = match wind {
                Wind::Speed(c) => value(c, "ws10_mps")?,
                Wind::Components(u, v) => value(u, "u10_mps")?.hypot(value(v, "v10_mps")?),
            };
            if ws10_mps < 0.0 {
                return Err(fail(format!("negative wind speed {ws10_mps}")));
            }
            let lcc_frac = value(lcc_col, "lcc_frac")?;
            if !(0.0..=1.0).contains(&lcc_frac) {
                return Err(fail(format!("lcc_frac {lcc_frac} outside [0, 1]")));
            }
            Ok(Era5Record {
                timestamp,
                t2m_c: value(t2m_col, "t2m_c")?,
                d2m_c: value(d2m_col, "d2m_c")?,
                ws10_mps,
                sp_hpa: value(sp_col, "sp_hpa")?,
                lcc_frac,
                t950_c: value(t950_col, "t950_c")?,
            })
        })();
        match parsed {
            Ok(rec) => {
                if let Some(prev) = records.last() {
                    if rec.timestamp <= prev.timestamp {
                        return Err(IngestError::NonMonotonicTime {
                            row: row_no,
                            timestamp: time_text.to_string(),
                        });
                    }
                }
                records.push(rec);
            }
            Err(e) => row_errors.push(e),
        }
    }
    Ok(Loaded { records, row_errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER_UV: &str = "time,t2m_c,d2m_c,u10_mps,v10_mps,sp_hpa,lcc_frac,t950_c\n";

    #[test]
    fn wind_from_components() {
        let csv = format!("{HEADER_UV}2010-01-01T00:00:00Z,10,8,3,4,1012,0.2,12\n");
        let loaded = load_era5_csv(csv.as_bytes()).unwrap();
        assert_eq!(loaded.records[0].ws10_mps, 5.0);
    }

    #[test]
    fn cloud_fraction_out_of_range_is_row_error() {
        let csv = format!(
            "{HEADER_UV}2010-01-01T00:00:00Z,10,8,3,4,1012,1.2,12\n\
             2010-01-01T01:00:00Z,10,8,3,4,1012,0.5,12\n"
        );
        let loaded = load_era5_csv(csv.as_bytes()).unwrap();
        assert_eq!(loaded.row_errors.len(), 1);
        assert_eq!(loaded.row_errors[0].row, 1);
        assert_eq!(loaded.records.len(), 1);
    }

    #[test]
    fn repeated_timestamp_is_fatal() {
        let csv = format!(
            "{HEADER_UV}2010-01-01T00:00:00Z,10,8,3,4,1012,0.2,12\n\
             2010-01-01T00:00:00Z,10,8,3,4,1012,0.2,12\n"
        );
        assert!(matches!(
            load_era5_csv(csv.as_bytes()),
            Err(IngestError::NonMonotonicTime { row: 2, .. })
        ));
    }

    #[test]
    fn missing_schema_columns() {
        let csv = "time,t2m_c,d2m_c,sp_hpa,lcc_frac,t950_c\n";
        assert!(matches!(
            load_era5_csv(csv.as_bytes()),
            Err(IngestError::MissingColumn(c)) if c == "ws10_mps"
        ));
        let csv = "time,t2m_c,d2m_c,ws10_mps,lcc_frac,t950_c\n";
        assert!(matches!(
            load_era5_csv(csv.as_bytes()),
            Err(IngestError::MissingColumn(c)) if c == "sp_hpa"
        ));
    }

    #[test]
    fn accepts_plain_iso_times() {
        let csv = "time,t2m_c,d2m_c,ws10_mps,sp_hpa,lcc_frac,t950_c\n2010-01-01 03:00,1,0,2,990,0,3\n";
        let loaded = load_era5_csv(csv.as_bytes()).unwrap();
        assert_eq!(loaded.records[0].timestamp, Utc.with_ymd_and_hms(2010, 1, 1, 3, 0, 0).unwrap());
    }
}
