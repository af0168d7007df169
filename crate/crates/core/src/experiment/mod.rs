//! End-to-end experiment: train at one site, evaluate a holdout period and
//! apply the frozen model to other sites without any refitting.

mod run;
mod synth;

pub use run::{
    emit_curves, evaluate_site, horizon_sweep, load_site_series, run_experiment, sha256_file, train_from_config,
    transfer_from_disk, write_site, AuditRecord, BaselineScores, ExperimentBundle, HorizonResult, SiteResult,
    TrainedArtifacts, CLIMATOLOGY_FILE, LOGISTIC_FILE, MODEL_FILE, SCALER_FILE,
};
pub use synth::{fog_base_rate, synthesize_site, Regime, SyntheticSiteSpec, MIN_SYNTHETIC_DAYS, RARE_TRIGGER_SCALE};

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{EvalError, LogisticConfig, DEFAULT_THRESHOLD};
use crate::explain::ExplainError;
use crate::features::{FeatureError, TimeRange};
use crate::gbdt::{GbdtError, Hyperparams};
use crate::ingest::IngestError;
use crate::solar::SolarError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid synthetic site: {0}")]
    InvalidSpec(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] GbdtError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Solar(#[from] SolarError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    /// Process exit code: 2 for configuration problems, 3 for data
    /// problems, 4 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::InvalidSpec(_) => 2,
            ExperimentError::Invariant(_) => 4,
            ExperimentError::Model(GbdtError::InvalidHyperparams(_)) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteRole {
    Train,
    Transfer,
}

/// Generator settings for a site with no data files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSource {
    pub n_days: u32,
    pub seed: u64,
    pub fog_propensity: f64,
    pub regime: Regime,
    #[serde(default)]
    pub start: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteConfig {
    pub icao: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub elevation: f64,
    pub role: SiteRole,
    /// ASOS CSV (`.csv`) or one raw report per line.
    #[serde(default)]
    pub metar_path: Option<PathBuf>,
    #[serde(default)]
    pub era5_path: Option<PathBuf>,
    /// Year and month for raw reports without an archive stamp.
    #[serde(default)]
    pub metar_month: Option<NaiveDate>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSource>,
}

impl SiteConfig {
    pub fn synthetic_spec(&self) -> Option<SyntheticSiteSpec> {
        self.synthetic.as_ref().map(|s| SyntheticSiteSpec {
            icao: self.icao.clone(),
            lat_deg: self.lat,
            lon_deg: self.lon,
            elevation_m: self.elevation,
            n_days: s.n_days,
            seed: s.seed,
            fog_propensity: s.fog_propensity,
            regime: s.regime,
            start: s.start.unwrap_or_else(|| NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid date")),
        })
    }
}

fn default_horizon() -> u32 {
    2
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fogcast-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sites: Vec<SiteConfig>,
    pub train_range: TimeRange,
    pub test_range: TimeRange,
    #[serde(default = "default_horizon")]
    pub horizon_h: u32,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub logistic: LogisticConfig,
    /// Horizons for the `sweep` command.
    #[serde(default)]
    pub sweep_horizons: Vec<u32>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn train_site(&self) -> Result<&SiteConfig, ExperimentError> {
        let mut train = self.sites.iter().filter(|s| s.role == SiteRole::Train);
        match (train.next(), train.next()) {
            (Some(s), None) => Ok(s),
            (None, _) => Err(ExperimentError::Config("no site has role train".into())),
            (Some(_), Some(_)) => Err(ExperimentError::Config("more than one site has role train".into())),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        self.train_site()?;
        if self.train_range.is_empty() || self.test_range.is_empty() {
            return bad("train_range and test_range must be non-empty".into());
        }
        if self.train_range.overlaps(&self.test_range) {
            return bad("train_range and test_range overlap".into());
        }
        if self.horizon_h == 0 {
            return bad("horizon_h must be at least 1".into());
        }
        if !self.threshold.is_finite() {
            return bad(format!("threshold {}", self.threshold));
        }
        self.hyperparams.validate()?;
        let mut names: Vec<&str> = self.sites.iter().map(|s| s.icao.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("site icao codes must be unique".into());
        }
        for s in &self.sites {
            let files = s.metar_path.is_some() || s.era5_path.is_some();
            match (&s.synthetic, files) {
                (Some(_), true) => return bad(format!("site {} has both data files and a synthetic source", s.icao)),
                (None, false) => return bad(format!("site {} has no data source", s.icao)),
                (None, true) if s.metar_path.is_none() || s.era5_path.is_none() => {
                    return bad(format!("site {} needs both metar_path and era5_path", s.icao))
                }
                (Some(_), false) => s.synthetic_spec().expect("synthetic present").validate()?,
                _ => {}
            }
        }
        Ok(())
    }

    /// Hyperparameters with the experiment seed applied.
    pub fn effective_hyperparams(&self) -> Hyperparams {
        Hyperparams { seed: self.seed, ..self.hyperparams.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "sites": [
            {"icao": "AAAA", "lat": -33.4, "lon": -70.8, "role": "train",
             "synthetic": {"n_days": 60, "seed": 1, "fog_propensity": 0.6, "regime": "radiative"}},
            {"icao": "BBBB", "lat": 37.6, "lon": -122.4, "role": "transfer",
             "synthetic": {"n_days": 40, "seed": 2, "fog_propensity": 0.6, "regime": "rare_event"}}
        ],
        "train_range": {"start": "2010-01-01T00:00:00Z", "end": "2010-02-01T00:00:00Z"},
        "test_range": {"start": "2010-02-01T00:00:00Z", "end": "2010-03-02T00:00:00Z"}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(CONFIG).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.horizon_h, 2);
        assert_eq!(cfg.threshold, 0.5);
        assert_eq!(cfg.hyperparams, Hyperparams::default());
        assert_eq!(cfg.train_site().unwrap().icao, "AAAA");
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_two_train_sites_and_overlap() {
        let mut cfg = ExperimentConfig::from_json(CONFIG).unwrap();
        cfg.sites[1].role = SiteRole::Train;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        let mut cfg = ExperimentConfig::from_json(CONFIG).unwrap();
        cfg.test_range.start = cfg.train_range.start;
        assert!(matches!(cfg.validate(), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn malformed_json_is_config_error() {
        assert_eq!(ExperimentConfig::from_json("{").unwrap_err().exit_code(), 2);
    }
}
