use std::io::BufReader;

use chrono::{DateTime, NaiveDate, TimeDelta, TimeZone, Utc};
use fogcast::ingest::{
    build_hourly_series, load_asos_csv, load_era5_csv, load_metar_text, parse_metar, Era5Record, IngestError,
    MetarRecord, RejectReason, SiteMeta,
};

const CORPUS: &str = include_str!("data/metar_corpus.txt");
const EXPECTED: &str = include_str!("data/metar_corpus_expected.csv");

fn july_2011() -> NaiveDate {
    NaiveDate::from_ymd_opt(2011, 7, 1).unwrap()
}

fn cell(s: &str) -> Option<f64> {
    (!s.is_empty()).then(|| s.parse().unwrap())
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-9,
        (None, None) => true,
        _ => false,
    }
}

#[test]
fn corpus_decodes_to_the_encoded_values() {
    let reports: Vec<&str> = CORPUS.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).collect();
    let expected: Vec<Vec<&str>> = EXPECTED.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert!(reports.len() >= 200);
    assert_eq!(reports.len(), expected.len());

    let mut rejected = 0;
    for (text, exp) in reports.iter().zip(&expected) {
        match parse_metar(text, july_2011()) {
            Ok(r) => {
                assert_ne!(exp[1], "REJECT", "{text} should have been rejected");
                assert_eq!(r.station, exp[0], "{text}");
                assert_eq!(r.timestamp, exp[1].parse::<DateTime<Utc>>().unwrap(), "{text}");
                let fields = [r.visibility_km, r.temp_c, r.dewpoint_c, r.wind_speed_mps, r.pressure_hpa];
                for (k, (got, want)) in fields.into_iter().zip(exp[2..].iter().map(|s| cell(s))).enumerate() {
                    assert!(close(got, want), "{text}: field {k} decoded {got:?}, encoded {want:?}");
                }
            }
            Err(IngestError::MalformedReport { reason, .. }) => {
                assert_eq!(exp[1], "REJECT", "{text} rejected as {reason}");
                rejected += 1;
            }
            Err(e) => panic!("unclassified failure on {text}: {e}"),
        }
    }
    let rate = rejected as f64 / reports.len() as f64;
    assert!(rate < 0.01, "rejection rate {rate}");
}

#[test]
fn corpus_loader_reports_row_errors_without_failing() {
    let loaded = load_metar_text(BufReader::new(CORPUS.as_bytes()), july_2011()).unwrap();
    assert_eq!(loaded.row_errors.len(), 1);
    assert!(loaded.row_errors[0].reason.contains(&RejectReason::MissingTimestamp.to_string()));
    assert!(loaded.records.len() >= 200);
}

fn at(h: i64, m: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2012, 5, 1, 0, 0, 0).unwrap() + TimeDelta::hours(h) + TimeDelta::minutes(m)
}

fn report(ts: DateTime<Utc>, vis: Option<f64>) -> MetarRecord {
    MetarRecord {
        station: "SCEL".into(),
        timestamp: ts,
        visibility_km: vis,
        temp_c: None,
        dewpoint_c: None,
        wind_speed_mps: None,
        pressure_hpa: None,
        raw: String::new(),
    }
}

fn era5(hours: std::ops::Range<i64>) -> Vec<Era5Record> {
    hours
        .map(|h| Era5Record {
            timestamp: at(h, 0),
            t2m_c: 10.0,
            d2m_c: 8.0,
            ws10_mps: 2.0,
            sp_hpa: 1015.0,
            lcc_frac: 0.5,
            t950_c: 9.0,
        })
        .collect()
}

fn site() -> SiteMeta {
    SiteMeta { icao: "SCEL".into(), lat_deg: -33.39, lon_deg: -70.79, elevation_m: 474.0 }
}

fn visibilities(metars: &[MetarRecord], hours: std::ops::Range<i64>) -> Vec<f64> {
    build_hourly_series(metars, &era5(hours), site()).unwrap().rows().iter().map(|r| r.visibility_km).collect()
}

#[test]
fn first_report_in_an_hour_is_kept() {
    let metars = [report(at(0, 20), Some(3.0)), report(at(0, 0), Some(0.4)), report(at(1, 0), Some(5.0))];
    assert_eq!(visibilities(&metars, 0..2), vec![0.4, 5.0]);
}

#[test]
fn gaps_are_forward_filled_then_leading_gap_back_filled() {
    let metars = [
        report(at(0, 0), None),
        report(at(1, 0), Some(2.0)),
        report(at(2, 0), None),
        report(at(4, 0), Some(5.0)),
    ];
    assert_eq!(visibilities(&metars, 0..5), vec![2.0, 2.0, 2.0, 2.0, 5.0]);
    let series = build_hourly_series(&metars, &era5(0..5), site()).unwrap();
    let reported: Vec<bool> = series.rows().iter().map(|r| r.metar_reported).collect();
    assert_eq!(reported, vec![true, true, true, false, true]);
}

#[test]
fn negative_visibility_rows_are_dropped_before_filling() {
    let metars = [report(at(0, 0), Some(2.0)), report(at(1, 0), Some(-1.0)), report(at(2, 0), Some(5.0))];
    let series = build_hourly_series(&metars, &era5(0..3), site()).unwrap();
    let vis: Vec<f64> = series.rows().iter().map(|r| r.visibility_km).collect();
    assert_eq!(vis, vec![2.0, 2.0, 5.0]);
    assert!(!series.rows()[1].metar_reported);
}

#[test]
fn grid_is_contiguous_over_the_overlap() {
    let metars: Vec<MetarRecord> = (0..30).step_by(3).map(|h| report(at(h, 10), Some(1.0 + h as f64))).collect();
    let series = build_hourly_series(&metars, &era5(5..40), site()).unwrap();
    let rows = series.rows();
    assert_eq!(rows.first().unwrap().timestamp, at(5, 0));
    assert_eq!(rows.last().unwrap().timestamp, at(27, 0));
    assert_eq!(rows.len() as i64, (rows.last().unwrap().timestamp - rows[0].timestamp).num_hours() + 1);
    assert!(rows.windows(2).all(|w| w[1].timestamp - w[0].timestamp == TimeDelta::hours(1)));

    assert!(matches!(build_hourly_series(&metars, &era5(100..110), site()), Err(IngestError::NoOverlap)));
}

#[test]
fn asos_and_era5_exports_feed_the_series() {
    let asos = "station,valid,vsby,tmpf,dwpf,sknt,mslp\n\
                KSFO,2012-05-01 00:56,10.00,59.0,50.0,12,1015.2\n\
                KSFO,2012-05-01 01:56,M,57.0,52.0,8,M\n\
                KSFO,2012-05-01 02:56,0.25,55.0,55.0,0,1016.0\n";
    let era = "time,t2m_c,d2m_c,sp_hpa,lcc_frac,t950_c,u10_mps,v10_mps\n\
               2012-05-01T00:00:00Z,14.0,10.0,1014.0,0.1,12.0,3.0,4.0\n\
               2012-05-01T01:00:00Z,13.5,10.5,1014.2,0.3,12.5,0.0,2.0\n\
               2012-05-01T02:00:00Z,13.0,12.8,1014.5,0.9,13.5,0.0,0.0\n";
    let metars = load_asos_csv(asos.as_bytes()).unwrap();
    assert!(metars.row_errors.is_empty());
    assert_eq!(metars.records[0].temp_c, Some(15.0));
    assert_eq!(metars.records[1].visibility_km, None);
    let reanalysis = load_era5_csv(era.as_bytes()).unwrap();
    assert_eq!(reanalysis.records[0].ws10_mps, 5.0);

    let meta = SiteMeta { icao: "KSFO".into(), lat_deg: 37.62, lon_deg: -122.37, elevation_m: 4.0 };
    let series = build_hourly_series(&metars.records, &reanalysis.records, meta).unwrap();
    let vis: Vec<f64> = series.rows().iter().map(|r| r.visibility_km).collect();
    assert!((vis[0] - 16.09344).abs() < 1e-12);
    assert_eq!(vis[1], vis[0]);
    assert!((vis[2] - 0.25 * 1.609344).abs() < 1e-12);
    assert!(series.rows().iter().all(|r| r.atmosphere.is_some()));
}
