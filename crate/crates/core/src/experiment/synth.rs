//! Seeded synthetic airport series with a radiative fog process.

use chrono::{DateTime, Datelike, NaiveDate, TimeDelta, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::ingest::{Atmosphere, SeriesRow, SiteMeta, SiteSeries};
use crate::solar::{solar_declination, solar_elevation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Inland valley: fog forms on clear, calm, near-saturated nights and
    /// lingers until the sun or the wind clears it.
    Radiative,
    /// Windy coastal site where fog is a rare, brief event carried in on
    /// moderate wind by saturated air, at any hour.
    RareEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSiteSpec {
    #[serde(default = "default_icao")]
    pub icao: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default)]
    pub elevation_m: f64,
    pub n_days: u32,
    pub seed: u64,
    pub fog_propensity: f64,
    pub regime: Regime,
    #[serde(default = "default_start")]
    pub start: NaiveDate,
}

fn default_icao() -> String {
    "SYNT".into()
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid date")
}

pub const MIN_SYNTHETIC_DAYS: u32 = 30;
/// Trigger probability multiplier for the rare-event regime.
pub const RARE_TRIGGER_SCALE: f64 = 0.03;
/// Share of hours without a report.
const MISSING_REPORT_RATE: f64 = 0.02;
const BURN_IN_H: i64 = 240;

impl SyntheticSiteSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidSpec(m));
        if self.n_days < MIN_SYNTHETIC_DAYS {
            return bad(format!("n_days {} < {MIN_SYNTHETIC_DAYS}", self.n_days));
        }
        if !(0.0..=1.0).contains(&self.fog_propensity) {
            return bad(format!("fog_propensity {} outside [0, 1]", self.fog_propensity));
        }
        if !(-90.0..=90.0).contains(&self.lat_deg) || !(-180.0..=180.0).contains(&self.lon_deg) {
            return bad(format!("coordinates ({}, {})", self.lat_deg, self.lon_deg));
        }
        if self.icao.trim().is_empty() {
            return bad("empty icao".into());
        }
        Ok(())
    }

    pub fn site(&self) -> SiteMeta {
        SiteMeta {
            icao: self.icao.clone(),
            lat_deg: self.lat_deg,
            lon_deg: self.lon_deg,
            elevation_m: self.elevation_m,
        }
    }
}

struct Climate {
    mean_temp: f64,
    seasonal_amp: f64,
    diurnal_amp: f64,
    /// Mean gap between daily mean temperature and dew point.
    moisture_deficit: f64,
    mean_wind: f64,
    /// Innovation scale of hourly log wind.
    wind_noise: f64,
    /// Drop in the dew-point deficit per m/s of wind above the mean; onshore
    /// flow brings the moisture at advection sites.
    wind_moistening: f64,
}

impl Climate {
    fn of(regime: Regime) -> Self {
        match regime {
            Regime::Radiative => Self {
                mean_temp: 12.0,
                seasonal_amp: 6.0,
                diurnal_amp: 5.0,
                moisture_deficit: 6.0,
                mean_wind: 3.2,
                wind_noise: 0.22,
                wind_moistening: 0.0,
            },
            Regime::RareEvent => Self {
                mean_temp: 14.0,
                seasonal_amp: 3.0,
                diurnal_amp: 3.0,
                moisture_deficit: 5.0,
                mean_wind: 7.5,
                wind_noise: 0.1,
                wind_moistening: 0.8,
            },
        }
    }
}

struct State {
    anomaly: f64,
    cloud_logit: f64,
    log_wind: f64,
    deficit: f64,
    dewpoint: f64,
    pressure: f64,
    upper_noise: f64,
    fog: bool,
    fog_age: u32,
    visibility: f64,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Generates an hourly series. Identical specs give identical series.
pub fn synthesize_site(spec: &SyntheticSiteSpec) -> Result<SiteSeries, ExperimentError> {
    spec.validate()?;
    let climate = Climate::of(spec.regime);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
    let hemisphere = if spec.lat_deg < 0.0 { -1.0 } else { 1.0 };
    let start: DateTime<Utc> = spec.start.and_hms_opt(0, 0, 0).expect("midnight").and_utc();

    let mut s = State {
        anomaly: 0.0,
        cloud_logit: -0.8,
        log_wind: climate.mean_wind.ln(),
        deficit: climate.moisture_deficit,
        dewpoint: climate.mean_temp - climate.moisture_deficit,
        pressure: 1013.0,
        upper_noise: 0.0,
        fog: false,
        fog_age: 0,
        visibility: 10.0,
    };

    let n_hours = spec.n_days as i64 * 24;
    let mut rows = Vec::with_capacity(n_hours as usize);
    for k in -BURN_IN_H..n_hours {
        let ts = start + TimeDelta::hours(k);
        let elevation = solar_elevation(spec.lat_deg, spec.lon_deg, ts)?;
        // Surface temperature lags the sun by about two hours.
        let lagged = solar_elevation(spec.lat_deg, spec.lon_deg, ts - TimeDelta::hours(2))?;
        let season = hemisphere * solar_declination(ts.ordinal())? / 23.44;

        s.anomaly = 0.97 * s.anomaly + 0.35 * normal(&mut rng);
        s.cloud_logit = 0.93 * s.cloud_logit + 0.07 * -0.8 + 0.45 * normal(&mut rng);
        s.log_wind = 0.9 * s.log_wind + 0.1 * climate.mean_wind.ln() + climate.wind_noise * normal(&mut rng);
        s.deficit = (0.995 * s.deficit + 0.005 * climate.moisture_deficit + 0.12 * normal(&mut rng)).clamp(0.3, 15.0);
        s.pressure = (1013.0 + 0.98 * (s.pressure - 1013.0) + 0.6 * normal(&mut rng)).clamp(980.0, 1045.0);
        s.upper_noise = 0.9 * s.upper_noise + 0.2 * normal(&mut rng);

        let lcc = logistic(s.cloud_logit);
        let sun = elevation.to_radians().sin();
        let wind = s.log_wind.exp() * (1.0 + 0.5 * sun.max(0.0));
        let daily_mean = climate.mean_temp + climate.seasonal_amp * season + s.anomaly;
        let phase = lagged.to_radians().sin();
        let mut amp = climate.diurnal_amp * (1.0 - 0.7 * lcc);
        if phase < 0.0 {
            // Calm nights cool harder.
            amp *= 1.0 + 0.6 * (-wind / 2.0).exp();
        }
        let t2m = daily_mean + amp * phase;
        let dew_target = daily_mean - s.deficit - climate.wind_moistening * (wind - climate.mean_wind);
        s.dewpoint = (s.dewpoint + 0.15 * (dew_target - s.dewpoint) + 0.15 * normal(&mut rng)).min(t2m);
        let depression = t2m - s.dewpoint;
        let t950 = daily_mean - 3.5 + s.upper_noise;

        let u_trigger: f64 = rng.gen();
        let u_persist: f64 = rng.gen();
        match spec.regime {
            Regime::Radiative => {
                if s.fog {
                    s.fog_age += 1;
                    let burned_off = elevation > 20.0 && u_persist > 0.7;
                    if burned_off || wind > 5.0 || depression > 3.0 || u_persist > 0.95 {
                        s.fog = false;
                    }
                } else if elevation < 0.0 && depression < 1.5 && wind < 3.0 && u_trigger < spec.fog_propensity {
                    s.fog = true;
                    s.fog_age = 0;
                }
            }
            Regime::RareEvent => {
                if s.fog {
                    s.fog_age += 1;
                    if s.fog_age >= 2 || u_persist > 0.4 {
                        s.fog = false;
                    }
                } else if depression < 1.0
                    && (5.0..10.0).contains(&wind)
                    && u_trigger < spec.fog_propensity * RARE_TRIGGER_SCALE
                {
                    s.fog = true;
                    s.fog_age = 0;
                }
            }
        }

        let u_vis: f64 = rng.gen();
        let vis_noise = 0.4 * normal(&mut rng);
        let u_report: f64 = rng.gen();
        s.visibility = if s.fog {
            0.1 + 0.8 * u_vis
        } else {
            (1.1 + 1.8 * depression + 0.3 * wind + vis_noise).clamp(1.05, 10.0)
        };
        if k < 0 {
            continue;
        }
        let reported = rows.is_empty() || u_report >= MISSING_REPORT_RATE;
        let visibility_km = if reported {
            s.visibility
        } else {
            rows.last().map_or(s.visibility, |r: &SeriesRow| r.visibility_km)
        };
        rows.push(SeriesRow {
            timestamp: ts,
            visibility_km,
            atmosphere: Some(Atmosphere {
                t2m_c: t2m,
                d2m_c: s.dewpoint,
                ws10_mps: wind,
                sp_hpa: s.pressure,
                lcc_frac: lcc,
                t950_c: t950,
            }),
            metar_reported: reported,
        });
    }
    Ok(SiteSeries::new(spec.site(), rows)?)
}

/// Share of reported hours with visibility below 1 km.
pub fn fog_base_rate(series: &SiteSeries) -> f64 {
    let reported: Vec<&SeriesRow> = series.rows().iter().filter(|r| r.metar_reported).collect();
    let fog = reported.iter().filter(|r| r.visibility_km < crate::features::FOG_VISIBILITY_KM).count();
    fog as f64 / reported.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(regime: Regime) -> SyntheticSiteSpec {
        SyntheticSiteSpec {
            icao: "SYNT".into(),
            lat_deg: -33.4,
            lon_deg: -70.8,
            elevation_m: 0.0,
            n_days: 60,
            seed: 7,
            fog_propensity: 0.6,
            regime,
            start: default_start(),
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synthesize_site(&spec(Regime::Radiative)).unwrap();
        let b = synthesize_site(&spec(Regime::Radiative)).unwrap();
        assert_eq!(a, b);
        let c = synthesize_site(&SyntheticSiteSpec { seed: 8, ..spec(Regime::Radiative) }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn physical_ranges() {
        let s = synthesize_site(&spec(Regime::Radiative)).unwrap();
        assert_eq!(s.len(), 60 * 24);
        for r in s.rows() {
            let a = r.atmosphere.unwrap();
            assert!(a.d2m_c <= a.t2m_c);
            assert!(a.ws10_mps > 0.0);
            assert!((0.0..=1.0).contains(&a.lcc_frac));
            assert!((0.0..=10.0).contains(&r.visibility_km));
        }
    }

    #[test]
    fn rejects_short_or_invalid_specs() {
        assert!(synthesize_site(&SyntheticSiteSpec { n_days: 29, ..spec(Regime::Radiative) }).is_err());
        assert!(synthesize_site(&SyntheticSiteSpec { fog_propensity: 1.5, ..spec(Regime::Radiative) }).is_err());
    }
}
