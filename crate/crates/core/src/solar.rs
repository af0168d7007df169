//! Closed-form solar geometry.
//!
//! Declination and the equation of time use Spencer's (1971) Fourier
//! series in the fractional year of the civil day number. Elevation is
//! geometric (no refraction):
//!
//! `elevation = asin(sin φ · sin δ + cos φ · cos δ · cos h)`
//!
//! with latitude φ, declination δ and hour angle h.

use std::f64::consts::PI;

use chrono::{DateTime, Datelike, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolarError {
    #[error("day of year {0} outside 1..=366")]
    OutOfRangeDay(u32),
    #[error("latitude {0} outside [-90, 90]")]
    OutOfRangeLatitude(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolarGeometry {
    pub declination_deg: f64,
    pub hour_angle_deg: f64,
    pub elevation_deg: f64,
    pub latitude_deg: f64,
}

fn fractional_year(day_of_year: u32) -> f64 {
    2.0 * PI * (day_of_year as f64 - 1.0) / 365.0
}

/// Solar declination in degrees for a civil day number.
pub fn solar_declination(day_of_year: u32) -> Result<f64, SolarError> {
    if !(1..=366).contains(&day_of_year) {
        return Err(SolarError::OutOfRangeDay(day_of_year));
    }
    let b = fractional_year(day_of_year);
    let rad = 0.006918 - 0.399912 * b.cos() + 0.070257 * b.sin() - 0.006758 * (2.0 * b).cos()
        + 0.000907 * (2.0 * b).sin()
        - 0.002697 * (3.0 * b).cos()
        + 0.00148 * (3.0 * b).sin();
    Ok(rad.to_degrees())
}

/// Equation of time in minutes (apparent minus mean solar time).
pub fn equation_of_time_minutes(day_of_year: u32) -> Result<f64, SolarError> {
    if !(1..=366).contains(&day_of_year) {
        return Err(SolarError::OutOfRangeDay(day_of_year));
    }
    let b = fractional_year(day_of_year);
    Ok(229.18
        * (0.000075 + 0.001868 * b.cos()
            - 0.032077 * b.sin()
            - 0.014615 * (2.0 * b).cos()
            - 0.040849 * (2.0 * b).sin()))
}

/// Wraps an angle in degrees to `[-180, 180)`.
pub fn wrap_degrees(angle: f64) -> f64 {
    (angle + 180.0).rem_euclid(360.0) - 180.0
}

/// Hour angle in degrees, negative before apparent solar noon.
pub fn hour_angle(timestamp: DateTime<Utc>, lon_deg: f64) -> f64 {
    let eot = equation_of_time_minutes(timestamp.ordinal()).expect("ordinal is 1..=366");
    let utc_hours = timestamp.hour() as f64
        + timestamp.minute() as f64 / 60.0
        + (timestamp.second() as f64 + timestamp.nanosecond() as f64 * 1e-9) / 3600.0;
    let solar_time = utc_hours + lon_deg / 15.0 + eot / 60.0;
    wrap_degrees(15.0 * (solar_time - 12.0))
}

/// Elevation from already computed angles (all in degrees).
pub fn elevation_from_angles(lat_deg: f64, declination_deg: f64, hour_angle_deg: f64) -> f64 {
    let (phi, delta, h) = (lat_deg.to_radians(), declination_deg.to_radians(), hour_angle_deg.to_radians());
    let s = phi.sin() * delta.sin() + phi.cos() * delta.cos() * h.cos();
    s.clamp(-1.0, 1.0).asin().to_degrees()
}

pub fn solar_geometry(lat_deg: f64, lon_deg: f64, timestamp: DateTime<Utc>) -> Result<SolarGeometry, SolarError> {
    if !(-90.0..=90.0).contains(&lat_deg) {
        return Err(SolarError::OutOfRangeLatitude(lat_deg));
    }
    let declination_deg = solar_declination(timestamp.ordinal())?;
    let hour_angle_deg = hour_angle(timestamp, lon_deg);
    Ok(SolarGeometry {
        declination_deg,
        hour_angle_deg,
        elevation_deg: elevation_from_angles(lat_deg, declination_deg, hour_angle_deg),
        latitude_deg: lat_deg,
    })
}

/// Geometric solar elevation angle in degrees, in `[-90, 90]`.
pub fn solar_elevation(lat_deg: f64, lon_deg: f64, timestamp: DateTime<Utc>) -> Result<f64, SolarError> {
    solar_geometry(lat_deg, lon_deg, timestamp).map(|g| g.elevation_deg)
}
