use serde::{Deserialize, Serialize};

use super::IngestError;

/// Spherical Earth radius used for great-circle distances.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GridPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Self {
        Self { lat_deg, lon_deg }
    }
}

pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dlat = p2 - p1;
    let dlon = (lon2 - lon1).to_radians();
    let a = (dlat / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// The grid point closest to the site by great-circle distance. Exact
/// ties go to the smallest latitude, then the smallest longitude.
pub fn nearest_grid_point(
    site_lat: f64,
    site_lon: f64,
    grid: &[GridPoint],
) -> Result<GridPoint, IngestError> {
    let mut best: Option<(f64, GridPoint)> = None;
    for &p in grid {
        let d = haversine_km(site_lat, site_lon, p.lat_deg, p.lon_deg);
        let better = match best {
            None => true,
            Some((bd, bp)) => {
                d < bd
                    || (d == bd
                        && (p.lat_deg, p.lon_deg)
                            .partial_cmp(&(bp.lat_deg, bp.lon_deg))
                            .is_some_and(|o| o.is_lt()))
            }
        };
        if better {
            best = Some((d, p));
        }
    }
    best.map(|(_, p)| p).ok_or(IngestError::EmptyGrid)
}
