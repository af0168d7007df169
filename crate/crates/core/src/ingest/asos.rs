//! ASOS archive CSV exports (one decoded observation per row).

use std::io::Read;

use chrono::{NaiveDateTime, TimeZone, Utc};

use super::{
    fahrenheit_to_celsius, numeric_cell, IngestError, Loaded, MetarRecord, RowError,
    KM_PER_STATUTE_MILE, MPS_PER_KNOT,
};

const REQUIRED: [&str; 3] = ["station", "valid", "vsby"];

/// Loads an archive export. Required columns: `station`, `valid`
/// (`YYYY-MM-DD HH:MM`, UTC) and `vsby` (statute miles). Optional: `tmpf`,
/// `dwpf` (°F), `sknt` (knots), `mslp` (hPa) and `metar` (raw text).
///
/// Rows with an unreadable timestamp or a negative visibility are skipped
/// and reported in [`Loaded::row_errors`]; `M` and other non-numeric cells
/// become absent fields.
pub fn load_asos_csv<R: Read>(reader: R) -> Result<Loaded<MetarRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    for name in REQUIRED {
        if column(name).is_none() {
            return Err(IngestError::MissingColumn(name.to_string()));
        }
    }
    let station_col = column("station").unwrap();
    let valid_col = column("valid").unwrap();
    let vsby_col = column("vsby").unwrap();
    let tmpf_col = column("tmpf");
    let dwpf_col = column("dwpf");
    let sknt_col = column("sknt");
    let mslp_col = column("mslp");
    let metar_col = column("metar");

    let mut records = Vec::new();
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
        let cell = |col: Option<usize>| col.and_then(|c| row.get(c)).unwrap_or("");
        let valid = cell(Some(valid_col));
        let timestamp = match NaiveDateTime::parse_from_str(valid, "%Y-%m-%d %H:%M") {
            Ok(ts) => Utc.from_utc_datetime(&ts),
            Err(_) => {
                row_errors.push(RowError {
                    row: row_no,
                    reason: format!("unreadable valid time `{valid}`"),
                });
                continue;
            }
        };
        let visibility_km = numeric_cell(cell(Some(vsby_col))).map(|sm| sm * KM_PER_STATUTE_MILE);
        if let Some(v) = visibility_km {
            if v < 0.0 {
                row_errors.push(RowError {
                    row: row_no,
                    reason: format!("negative visibility {v} km"),
                });
                continue;
            }
        }
        let wind_speed_mps = numeric_cell(cell(sknt_col))
            .filter(|k| *k >= 0.0)
            .map(|k| k * MPS_PER_KNOT);
        records.push(MetarRecord {
            station: cell(Some(station_col)).to_string(),
            timestamp,
            visibility_km,
            temp_c: numeric_cell(cell(tmpf_col)).map(fahrenheit_to_celsius),
            dewpoint_c: numeric_cell(cell(dwpf_col)).map(fahrenheit_to_celsius),
            wind_speed_mps,
            pressure_hpa: numeric_cell(cell(mslp_col)),
            raw: cell(metar_col).to_string(),
        });
    }
    Ok(Loaded { records, row_errors })
}
