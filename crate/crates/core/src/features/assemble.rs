use chrono::Datelike;

use super::{col, FeatureDataset, FeatureError, FeatureRow, FOG_VISIBILITY_KM, NUM_FEATURES};
use crate::ingest::{Atmosphere, SiteSeries};
use crate::solar::solar_elevation;

pub const MAGNUS_A: f64 = 17.625;
pub const MAGNUS_B_C: f64 = 243.04;

/// Longest look-back used by any feature, in hours.
const MAX_LAG_H: usize = 6;

/// Relative humidity (%) from temperature and dew point (°C) by the Magnus
/// approximation, clamped to `[0, 100]`.
pub fn relative_humidity(t_c: f64, td_c: f64) -> f64 {
    let gamma = |x: f64| MAGNUS_A * x / (MAGNUS_B_C + x);
    (100.0 * (gamma(td_c) - gamma(t_c)).exp()).clamp(0.0, 100.0)
}

/// Builds the feature matrix and the label shifted `horizon_h` hours ahead.
///
/// Visibility columns come from the filled observation series; all other
/// physical predictors come from the reanalysis. Rows lacking look-back
/// history, a future label, or reanalysis at any needed hour are dropped.
/// Hours without a genuine report are labelled 0.
pub fn assemble_features(series: &SiteSeries, horizon_h: u32) -> Result<FeatureDataset, FeatureError> {
    if horizon_h == 0 {
        return Err(FeatureError::InvalidHorizon);
    }
    let h = horizon_h as usize;
    let rows = series.rows();
    let needed = h + MAX_LAG_H + 1;
    if rows.len() < needed {
        return Err(FeatureError::SeriesTooShort { rows: rows.len(), needed, horizon_h });
    }
    let site = &series.site;

    let mut timestamps = Vec::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for t in MAX_LAG_H..rows.len() - h {
        let (Some(now), Some(ago3), Some(ago6)) =
            (rows[t].atmosphere, rows[t - 3].atmosphere, rows[t - 6].atmosphere)
        else {
            continue;
        };
        let ts = rows[t].timestamp;
        let angle = solar_elevation(site.lat_deg, site.lon_deg, ts)?;
        let depression = |a: &Atmosphere| a.t2m_c - a.d2m_c;

        let mut x: FeatureRow = [0.0; NUM_FEATURES];
        x[col::VISIBILIDAD_ACTUAL] = rows[t].visibility_km;
        x[col::VISIBILIDAD_LAG_1H] = rows[t - 1].visibility_km;
        x[col::VISIBILIDAD_LAG_3H] = rows[t - 3].visibility_km;
        x[col::VISIBILIDAD_LAG_6H] = rows[t - 6].visibility_km;
        x[col::TEMPERATURA_2M] = now.t2m_c;
        x[col::DEPRESION_PUNTO_ROCIO] = depression(&now);
        x[col::HUMEDAD_RELATIVA] = relative_humidity(now.t2m_c, now.d2m_c);
        x[col::VELOCIDAD_VIENTO_10M] = now.ws10_mps;
        x[col::PRESION_SUPERFICIE] = now.sp_hpa;
        x[col::GRADIENTE_TERMICO_950_SFC] = now.t950_c - now.t2m_c;
        x[col::COBERTURA_NUBES_BAJAS] = now.lcc_frac;
        x[col::TENDENCIA_DEPRESION_ROCIO_3H] = depression(&now) - depression(&ago3);
        x[col::TENDENCIA_DEPRESION_ROCIO_6H] = depression(&now) - depression(&ago6);
        x[col::TASA_ENFRIAMIENTO_3H] = (ago3.t2m_c - now.t2m_c) / 3.0;
        x[col::TASA_ENFRIAMIENTO_6H] = (ago6.t2m_c - now.t2m_c) / 6.0;
        x[col::TENDENCIA_PRESION_3H] = now.sp_hpa - ago3.sp_hpa;
        x[col::ANGULO_SOLAR] = angle;
        x[col::DIA_DEL_ANO] = ts.ordinal() as f64;
        x[col::IS_NIGHT] = if angle < 0.0 { 1.0 } else { 0.0 };
        if x.iter().any(|v| !v.is_finite()) {
            continue;
        }

        let target = &rows[t + h];
        let fog = target.metar_reported && target.visibility_km < FOG_VISIBILITY_KM;
        timestamps.push(ts);
        features.push(x);
        labels.push(fog as u8);
    }
    FeatureDataset::new(site.clone(), horizon_h, false, timestamps, features, labels)
}
