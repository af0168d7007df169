//! The 19 physics-informed features, the forward-shifted fog label and
//! training-only standardization.

mod assemble;
mod dataset;
mod scaler;

pub use assemble::{assemble_features, relative_humidity, MAGNUS_A, MAGNUS_B_C};
pub use dataset::{split_by_period, FeatureDataset, FeatureRow, TimeRange};
pub use scaler::{apply_scaler, fit_scaler, FittedOn, ScalerStats};

use thiserror::Error;

pub const NUM_FEATURES: usize = 19;

/// Frozen column order. Model and scaler files depend on it.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "visibilidad_actual",
    "visibilidad_lag_1h",
    "visibilidad_lag_3h",
    "visibilidad_lag_6h",
    "temperatura_2m",
    "depresion_punto_rocio",
    "humedad_relativa",
    "velocidad_viento_10m",
    "presion_superficie",
    "gradiente_termico_950_sfc",
    "cobertura_nubes_bajas",
    "tendencia_depresion_rocio_3h",
    "tendencia_depresion_rocio_6h",
    "tasa_enfriamiento_3h",
    "tasa_enfriamiento_6h",
    "tendencia_presion_3h",
    "angulo_solar",
    "dia_del_ano",
    "is_night",
];

pub const SCHEMA_VERSION: &str = "fogcast-features/1";

/// Fog means visibility strictly below this many kilometres.
pub const FOG_VISIBILITY_KM: f64 = 1.0;

/// Named column indices.
pub mod col {
    pub const VISIBILIDAD_ACTUAL: usize = 0;
    pub const VISIBILIDAD_LAG_1H: usize = 1;
    pub const VISIBILIDAD_LAG_3H: usize = 2;
    pub const VISIBILIDAD_LAG_6H: usize = 3;
    pub const TEMPERATURA_2M: usize = 4;
    pub const DEPRESION_PUNTO_ROCIO: usize = 5;
    pub const HUMEDAD_RELATIVA: usize = 6;
    pub const VELOCIDAD_VIENTO_10M: usize = 7;
    pub const PRESION_SUPERFICIE: usize = 8;
    pub const GRADIENTE_TERMICO_950_SFC: usize = 9;
    pub const COBERTURA_NUBES_BAJAS: usize = 10;
    pub const TENDENCIA_DEPRESION_ROCIO_3H: usize = 11;
    pub const TENDENCIA_DEPRESION_ROCIO_6H: usize = 12;
    pub const TASA_ENFRIAMIENTO_3H: usize = 13;
    pub const TASA_ENFRIAMIENTO_6H: usize = 14;
    pub const TENDENCIA_PRESION_3H: usize = 15;
    pub const ANGULO_SOLAR: usize = 16;
    pub const DIA_DEL_ANO: usize = 17;
    pub const IS_NIGHT: usize = 18;
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("series has {rows} rows; at least {needed} needed for horizon {horizon_h} h")]
    SeriesTooShort { rows: usize, needed: usize, horizon_h: u32 },
    #[error("horizon must be at least 1 hour")]
    InvalidHorizon,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("time ranges overlap")]
    OverlappingRanges,
    #[error("solar geometry: {0}")]
    Solar(#[from] crate::solar::SolarError),
    #[error("malformed dataset file: {0}")]
    Malformed(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
