//! METAR/SPECI decoding for the groups the pipeline consumes: station,
//! time, wind, prevailing visibility, temperature/dew point and pressure.
//!
//! Weather, cloud, runway visual range, trend and remark groups are
//! skipped. A corrupt optional group leaves its field empty; only a
//! missing station or time group rejects the report.

use std::fmt;
use std::io::BufRead;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::{IngestError, Loaded, RowError, HPA_PER_INHG, KM_PER_STATUTE_MILE, MPS_PER_KNOT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetarRecord {
    pub station: String,
    pub timestamp: DateTime<Utc>,
    pub visibility_km: Option<f64>,
    pub temp_c: Option<f64>,
    pub dewpoint_c: Option<f64>,
    pub wind_speed_mps: Option<f64>,
    pub pressure_hpa: Option<f64>,
    pub raw: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    Empty,
    MissingStation,
    MissingTimestamp,
    InvalidTimestamp,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::Empty => "empty report",
            RejectReason::MissingStation => "no station group",
            RejectReason::MissingTimestamp => "no DDHHMMZ time group",
            RejectReason::InvalidTimestamp => "time group out of range",
        };
        f.write_str(s)
    }
}

/// Decodes one report.
///
/// A METAR time group only carries day, hour and minute; `month` supplies
/// the year and month (its day is ignored). Archive lines prefixed with a
/// `YYYYMMDDHHMM` stamp take year and month from that stamp instead.
pub fn parse_metar(text: &str, month: NaiveDate) -> Result<MetarRecord, IngestError> {
    let reject = |reason| IngestError::MalformedReport {
        reason,
        text: text.to_string(),
    };
    let trimmed = text.trim().trim_end_matches('=').trim();
    let mut tokens: Vec<&str> = trimmed.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(reject(RejectReason::Empty));
    }

    let mut anchor = (month.year(), month.month());
    if let Some(stamp) = archive_stamp(tokens[0]) {
        anchor = stamp;
        tokens.remove(0);
    }
    while matches!(tokens.first(), Some(&"METAR") | Some(&"SPECI")) {
        tokens.remove(0);
    }
    let station = match tokens.first() {
        Some(t) if is_station(t) => t.to_string(),
        _ => return Err(reject(RejectReason::MissingStation)),
    };
    let (day, hour, minute) = match tokens.get(1).and_then(|t| time_group(t)) {
        Some(parts) => parts,
        None => return Err(reject(RejectReason::MissingTimestamp)),
    };
    let timestamp = NaiveDate::from_ymd_opt(anchor.0, anchor.1, day)
        .and_then(|d| d.and_hms_opt(hour, minute, 0))
        .map(|dt| Utc.from_utc_datetime(&dt))
        .ok_or_else(|| reject(RejectReason::InvalidTimestamp))?;

    let mut record = MetarRecord {
        station,
        timestamp,
        visibility_km: None,
        temp_c: None,
        dewpoint_c: None,
        wind_speed_mps: None,
        pressure_hpa: None,
        raw: text.trim().to_string(),
    };
    let mut visibility_seen = false;
    let mut wind_seen = false;

    let body = &tokens[2..];
    let mut i = 0;
    while i < body.len() {
        let tok = body[i];
        match tok {
            "RMK" | "BECMG" | "TEMPO" | "NOSIG" | "FM" | "PROB30" | "PROB40" => break,
            "AUTO" | "COR" | "NIL" | "CCA" | "CCB" => {}
            "CAVOK" => {
                if !visibility_seen {
                    record.visibility_km = Some(10.0);
                    visibility_seen = true;
                }
            }
            _ => {
                if !wind_seen {
                    if let Some(speed) = wind_group(tok) {
                        record.wind_speed_mps = speed;
                        wind_seen = true;
                        i += 1;
                        continue;
                    }
                }
                if !visibility_seen {
                    // "1 1/2SM" spans two tokens.
                    if let Some(next) = body.get(i + 1) {
                        if let Some(vis) = split_mile_group(tok, next) {
                            record.visibility_km = Some(vis);
                            visibility_seen = true;
                            i += 2;
                            continue;
                        }
                    }
                    if let Some(vis) = visibility_group(tok) {
                        record.visibility_km = vis;
                        visibility_seen = true;
                        i += 1;
                        continue;
                    }
                }
                if let Some((t, td)) = temperature_group(tok) {
                    record.temp_c = t;
                    record.dewpoint_c = td;
                } else if let Some(p) = pressure_group(tok) {
                    record.pressure_hpa = Some(p);
                }
            }
        }
        i += 1;
    }
    Ok(record)
}

/// Decodes a text file with one report per line. Blank lines and lines
/// starting with `#` are skipped; undecodable lines become row errors.
pub fn load_metar_text<R: BufRead>(reader: R, month: NaiveDate) -> Result<Loaded<MetarRecord>, IngestError> {
    let mut records = Vec::new();
    let mut row_errors = Vec::new();
    let mut row = 0;
    for line in reader.lines() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        row += 1;
        match parse_metar(text, month) {
            Ok(r) => records.push(r),
            Err(e) => row_errors.push(RowError { row, reason: e.to_string() }),
        }
    }
    Ok(Loaded { records, row_errors })
}

fn archive_stamp(tok: &str) -> Option<(i32, u32)> {
    if tok.len() != 12 || !tok.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let year: i32 = tok[0..4].parse().ok()?;
    let month: u32 = tok[4..6].parse().ok()?;
    (1..=12).contains(&month).then_some((year, month))
}

fn is_station(tok: &str) -> bool {
    tok.len() == 4
        && tok.as_bytes()[0].is_ascii_uppercase()
        && tok.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit())
}

fn time_group(tok: &str) -> Option<(u32, u32, u32)> {
    let digits = tok.strip_suffix('Z')?;
    if digits.len() != 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let day: u32 = digits[0..2].parse().ok()?;
    let hour: u32 = digits[2..4].parse().ok()?;
    let minute: u32 = digits[4..6].parse().ok()?;
    Some((day, hour, minute))
}

/// `dddff(Gfff)KT|MPS|KMH`. Returns `Some(None)` for a recognised but
/// unreadable group such as `/////KT`.
fn wind_group(tok: &str) -> Option<Option<f64>> {
    let (body, factor) = if let Some(b) = tok.strip_suffix("KT") {
        (b, MPS_PER_KNOT)
    } else if let Some(b) = tok.strip_suffix("MPS") {
        (b, 1.0)
    } else {
        (tok.strip_suffix("KMH")?, 1.0 / 3.6)
    };
    if body.len() < 5 {
        return None;
    }
    let (dir, rest) = body.split_at(3);
    if !(dir == "VRB" || dir == "///" || dir.bytes().all(|b| b.is_ascii_digit())) {
        return None;
    }
    let speed = rest.split('G').next().unwrap_or("");
    if speed.bytes().all(|b| b == b'/') {
        return Some(None);
    }
    if !(2..=3).contains(&speed.len()) || !speed.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let value: f64 = speed.parse().ok()?;
    Some(Some(value * factor))
}

/// Metres (`0800`, `9999`, `4000NDV`, `1500SW`) or statute miles (`10SM`,
/// `1/2SM`, `M1/4SM`, `P6SM`).
fn visibility_group(tok: &str) -> Option<Option<f64>> {
    if tok == "////" {
        return Some(None);
    }
    if let Some(miles) = tok.strip_suffix("SM") {
        let miles = miles.trim_start_matches(['M', 'P']);
        return statute_miles(miles).map(|m| Some(m * KM_PER_STATUTE_MILE));
    }
    if tok.len() >= 4 && tok.as_bytes()[..4].iter().all(u8::is_ascii_digit) {
        let suffix = &tok[4..];
        let directional = suffix == "NDV"
            || (suffix.len() <= 2 && suffix.bytes().all(|b| matches!(b, b'N' | b'S' | b'E' | b'W')));
        if !directional {
            return None;
        }
        let metres: f64 = tok[..4].parse().ok()?;
        let km = if metres >= 9999.0 { 10.0 } else { metres / 1000.0 };
        return Some(Some(km));
    }
    None
}

fn split_mile_group(whole: &str, fraction: &str) -> Option<f64> {
    if whole.is_empty() || whole.len() > 2 || !whole.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let frac = fraction.strip_suffix("SM")?;
    if !frac.contains('/') {
        return None;
    }
    let w: f64 = whole.parse().ok()?;
    let f = statute_miles(frac)?;
    Some((w + f) * KM_PER_STATUTE_MILE)
}

fn statute_miles(text: &str) -> Option<f64> {
    match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.parse().ok()?;
            let den: f64 = den.parse().ok()?;
            (den > 0.0).then(|| num / den)
        }
        None => {
            if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            text.parse().ok()
        }
    }
}

type TempPair = (Option<f64>, Option<f64>);

/// `TT/DD` with `M` marking negatives; either side may be missing.
fn temperature_group(tok: &str) -> Option<TempPair> {
    let (t, d) = tok.split_once('/')?;
    if d.contains('/') {
        return None;
    }
    let t = signed_temp(t)?;
    let d = if d.is_empty() { Some(None) } else { signed_temp(d) }?;
    Some((t, d))
}

fn signed_temp(text: &str) -> Option<Option<f64>> {
    if text.is_empty() || text.bytes().all(|b| b == b'/' || b == b'X') {
        return Some(None);
    }
    let (neg, digits) = match text.strip_prefix('M') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if digits.len() != 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let v: f64 = digits.parse().ok()?;
    Some(Some(if neg { -v } else { v }))
}

fn pressure_group(tok: &str) -> Option<f64> {
    let (unit, digits) = tok.split_at_checked(1)?;
    if digits.len() != 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let v: f64 = digits.parse().ok()?;
    match unit {
        "Q" => Some(v),
        "A" => Some(v / 100.0 * HPA_PER_INHG),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jan() -> NaiveDate {
        NaiveDate::from_ymd_opt(2010, 1, 1).unwrap()
    }

    #[test]
    fn decodes_metric_fog_report() {
        let r = parse_metar("SCEL 120800Z 00000KT 0800 FG 08/08 Q1020", jan()).unwrap();
        assert_eq!(r.station, "SCEL");
        assert_eq!(r.timestamp, Utc.with_ymd_and_hms(2010, 1, 12, 8, 0, 0).unwrap());
        assert_eq!(r.visibility_km, Some(0.8));
        assert_eq!(r.wind_speed_mps, Some(0.0));
        assert_eq!(r.temp_c, Some(8.0));
        assert_eq!(r.dewpoint_c, Some(8.0));
        assert_eq!(r.pressure_hpa, Some(1020.0));
    }

    #[test]
    fn decodes_us_units() {
        let r = parse_metar("KSFO 121256Z 28010KT 10SM FEW008 14/10 A3001", jan()).unwrap();
        assert!((r.visibility_km.unwrap() - 16.09344).abs() < 1e-12);
        assert!((r.wind_speed_mps.unwrap() - 5.14444).abs() < 1e-12);
        assert!((r.pressure_hpa.unwrap() - 30.01 * HPA_PER_INHG).abs() < 1e-9);
        assert_eq!(r.temp_c, Some(14.0));
    }

    #[test]
    fn short_time_group_is_rejected() {
        match parse_metar("EGLL 1208Z", jan()) {
            Err(IngestError::MalformedReport { reason, .. }) => {
                assert_eq!(reason, RejectReason::MissingTimestamp)
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn missing_station_is_rejected() {
        assert!(matches!(
            parse_metar("120800Z 00000KT 9999", jan()),
            Err(IngestError::MalformedReport { reason: RejectReason::MissingStation, .. })
        ));
    }

    #[test]
    fn day_outside_month_is_rejected() {
        let feb = NaiveDate::from_ymd_opt(2010, 2, 1).unwrap();
        assert!(matches!(
            parse_metar("EGLL 310850Z 24008KT 9999 12/08 Q1012", feb),
            Err(IngestError::MalformedReport { reason: RejectReason::InvalidTimestamp, .. })
        ));
    }

    #[test]
    fn negative_temperatures_and_fractions() {
        let r = parse_metar("METAR KORD 030651Z 36005KT 1 1/2SM BR OVC004 M02/M03 A2992", jan()).unwrap();
        assert_eq!(r.temp_c, Some(-2.0));
        assert_eq!(r.dewpoint_c, Some(-3.0));
        assert!((r.visibility_km.unwrap() - 1.5 * KM_PER_STATUTE_MILE).abs() < 1e-12);

        let r = parse_metar("KSFO 030656Z 00000KT M1/4SM FG VV001 11/11 A3010", jan()).unwrap();
        assert!((r.visibility_km.unwrap() - 0.25 * KM_PER_STATUTE_MILE).abs() < 1e-12);
    }

    #[test]
    fn cavok_ndv_and_archive_prefix() {
        let r = parse_metar("201006150900 METAR SCTE 150900Z 27012G22KT CAVOK 09/05 Q1008=", jan()).unwrap();
        assert_eq!(r.visibility_km, Some(10.0));
        assert_eq!(r.timestamp, Utc.with_ymd_and_hms(2010, 6, 15, 9, 0, 0).unwrap());
        assert!((r.wind_speed_mps.unwrap() - 12.0 * MPS_PER_KNOT).abs() < 1e-12);

        let r = parse_metar("SCEL 150900Z 18004MPS 4000NDV BR 10/09 Q1015", jan()).unwrap();
        assert_eq!(r.visibility_km, Some(4.0));
        assert_eq!(r.wind_speed_mps, Some(4.0));
    }

    #[test]
    fn corrupt_groups_leave_fields_empty() {
        let r = parse_metar("EGLL 150920Z /////KT //// 1X/0Y Q10X2", jan()).unwrap();
        assert_eq!(r.wind_speed_mps, None);
        assert_eq!(r.visibility_km, None);
        assert_eq!(r.temp_c, None);
        assert_eq!(r.pressure_hpa, None);
    }

    #[test]
    fn trend_and_remark_groups_are_ignored() {
        let r = parse_metar(
            "EGLL 150920Z 24010KT 9999 R27L/P1500 SCT030 15/09 Q1011 BECMG 0300 FG RMK AO2 SLP123",
            jan(),
        )
        .unwrap();
        assert_eq!(r.visibility_km, Some(10.0));
        assert_eq!(r.pressure_hpa, Some(1011.0));
    }

    #[test]
    fn missing_dewpoint_keeps_temperature() {
        let r = parse_metar("SCEL 150900Z 00000KT 9999 M01/ Q1015", jan()).unwrap();
        assert_eq!(r.temp_c, Some(-1.0));
        assert_eq!(r.dewpoint_c, None);
    }
}
