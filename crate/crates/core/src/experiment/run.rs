use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{synthesize_site, ExperimentConfig, ExperimentError, SiteConfig, SiteRole};
use crate::eval::{
    classification_report, persistence_baseline, roc_auc, train_logistic, write_pr_csv, write_roc_csv,
    ClimatologyTable, EvalReport, LinearModel,
};
use crate::explain::{importance_from_explanations, ImportanceRanking, TreeExplainer};
use crate::features::{apply_scaler, assemble_features, fit_scaler, split_by_period, FeatureDataset, ScalerStats};
use crate::gbdt::{train_gbdt, GbdtModel};
use crate::ingest::{build_hourly_series, load_asos_csv, load_era5_csv, load_metar_text, SiteMeta, SiteSeries};

pub const MODEL_FILE: &str = "model.json";
pub const SCALER_FILE: &str = "scaler.json";

/// Builds the hourly series of a configured site, from files or the
/// generator.
pub fn load_site_series(site: &SiteConfig, config: &ExperimentConfig) -> Result<SiteSeries, ExperimentError> {
    if let Some(spec) = site.synthetic_spec() {
        return synthesize_site(&spec);
    }
    let (Some(metar_path), Some(era5_path)) = (&site.metar_path, &site.era5_path) else {
        return Err(ExperimentError::Config(format!("site {} has no data source", site.icao)));
    };
    let metars = if metar_path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        load_asos_csv(File::open(metar_path)?)?
    } else {
        let month = site.metar_month.unwrap_or_else(|| config.train_range.start.date_naive());
        load_metar_text(BufReader::new(File::open(metar_path)?), month)?
    };
    let era5 = load_era5_csv(File::open(era5_path)?)?;
    let meta = SiteMeta { icao: site.icao.clone(), lat_deg: site.lat, lon_deg: site.lon, elevation_m: site.elevation };
    meta.validate()?;
    Ok(build_hourly_series(&metars.records, &era5.records, meta)?)
}

/// Scores of the reference forecasters on one evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    pub persistence_binary_auc: Option<f64>,
    pub persistence_continuous_auc: Option<f64>,
    pub climatology_auc: Option<f64>,
    pub logistic_auc: Option<f64>,
    pub persistence_binary: EvalReport,
    pub climatology: EvalReport,
    pub logistic: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteResult {
    pub icao: String,
    pub role: SiteRole,
    pub report: EvalReport,
    pub baselines: BaselineScores,
    pub importance: ImportanceRanking,
    /// Largest `|base + Σ shap − margin|` over the evaluated rows.
    pub max_shap_additivity_error: f64,
    #[serde(skip)]
    pub scores: Vec<f64>,
    #[serde(skip)]
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub model_sha256_before: String,
    pub model_sha256_after: String,
    pub scaler_sha256_before: String,
    pub scaler_sha256_after: String,
    pub transfer_sites: Vec<String>,
}

impl AuditRecord {
    pub fn unchanged(&self) -> bool {
        self.model_sha256_before == self.model_sha256_after && self.scaler_sha256_before == self.scaler_sha256_after
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentBundle {
    pub model: GbdtModel,
    pub scaler: ScalerStats,
    /// Scaled holdout partition of the training site.
    pub holdout: FeatureDataset,
    pub holdout_result: SiteResult,
    pub transfer_results: Vec<SiteResult>,
    pub audit: AuditRecord,
}

pub fn sha256_file(path: &Path) -> Result<String, ExperimentError> {
    let digest = Sha256::digest(fs::read(path)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Invariant(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn auc_or_none(scores: &[f64], labels: &[u8]) -> Option<f64> {
    roc_auc(scores, labels).ok()
}

/// Evaluates the frozen model, scaler and baselines on one unscaled
/// dataset. Nothing here fits anything to `raw`.
pub fn evaluate_site(
    model: &GbdtModel,
    scaler: &ScalerStats,
    climatology: &ClimatologyTable,
    logistic: &LinearModel,
    raw: &FeatureDataset,
    role: SiteRole,
    threshold: f64,
) -> Result<SiteResult, ExperimentError> {
    let scaled = apply_scaler(scaler, raw)?;
    let explainer = TreeExplainer::new(model)?;
    let explanations = explainer.explain_dataset(&scaled)?;
    let scores: Vec<f64> = explanations.iter().map(|e| crate::gbdt::sigmoid(e.margin)).collect();
    let max_err = explanations.iter().map(|e| e.additivity_error()).fold(0.0, f64::max);
    let labels = raw.labels().to_vec();

    let persistence = persistence_baseline(raw)?;
    let clim = climatology.score(raw);
    let lin = logistic.score(&scaled);
    let baselines = BaselineScores {
        persistence_binary_auc: auc_or_none(&persistence.binary, &labels),
        persistence_continuous_auc: auc_or_none(&persistence.continuous, &labels),
        climatology_auc: auc_or_none(&clim, &labels),
        logistic_auc: auc_or_none(&lin, &labels),
        persistence_binary: classification_report(&persistence.binary, &labels, threshold)?,
        climatology: classification_report(&clim, &labels, threshold)?,
        logistic: classification_report(&lin, &labels, threshold)?,
    };
    Ok(SiteResult {
        icao: raw.site.icao.clone(),
        role,
        report: classification_report(&scores, &labels, threshold)?,
        baselines,
        importance: importance_from_explanations(&explanations)?,
        max_shap_additivity_error: max_err,
        scores,
        labels,
    })
}

/// Writes `roc.csv` and `pr.csv` for a report into `dir`.
pub fn emit_curves(report: &EvalReport, dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir)?;
    write_roc_csv(BufWriter::new(File::create(dir.join("roc.csv"))?), &report.roc_points)?;
    write_pr_csv(BufWriter::new(File::create(dir.join("pr.csv"))?), &report.pr_points)?;
    Ok(())
}

pub fn write_site(dir: &Path, result: &SiteResult) -> Result<(), ExperimentError> {
    let site_dir = dir.join(&result.icao);
    fs::create_dir_all(&site_dir)?;
    write_json(&site_dir.join("report.json"), &result.report)?;
    write_json(&site_dir.join("baselines.json"), &result.baselines)?;
    emit_curves(&result.report, &site_dir)?;
    result.importance.write_csv(BufWriter::new(File::create(site_dir.join("importance.csv"))?))?;
    Ok(())
}

#[derive(Serialize)]
struct SiteSummary<'a> {
    icao: &'a str,
    role: SiteRole,
    n: usize,
    base_rate: f64,
    auc: Option<f64>,
    auprc: Option<f64>,
    f1: f64,
    mcc: f64,
    precision: f64,
    recall: f64,
    persistence_binary_auc: Option<f64>,
    persistence_continuous_auc: Option<f64>,
    climatology_auc: Option<f64>,
    logistic_auc: Option<f64>,
    top_feature: &'a str,
}

impl<'a> From<&'a SiteResult> for SiteSummary<'a> {
    fn from(r: &'a SiteResult) -> Self {
        Self {
            icao: &r.icao,
            role: r.role,
            n: r.report.n,
            base_rate: r.report.base_rate,
            auc: r.report.auc,
            auprc: r.report.auprc,
            f1: r.report.f1,
            mcc: r.report.mcc,
            precision: r.report.precision,
            recall: r.report.recall,
            persistence_binary_auc: r.baselines.persistence_binary_auc,
            persistence_continuous_auc: r.baselines.persistence_continuous_auc,
            climatology_auc: r.baselines.climatology_auc,
            logistic_auc: r.baselines.logistic_auc,
            top_feature: &r.importance.top().feature,
        }
    }
}

struct Trained {
    model: GbdtModel,
    scaler: ScalerStats,
    test_raw: FeatureDataset,
    climatology: ClimatologyTable,
    logistic: LinearModel,
}

fn train_at_site(series: &SiteSeries, config: &ExperimentConfig, horizon_h: u32) -> Result<Trained, ExperimentError> {
    let ds = assemble_features(series, horizon_h)?;
    let (train_raw, test_raw) = split_by_period(&ds, config.train_range, config.test_range)?;
    if train_raw.is_empty() || test_raw.is_empty() {
        return Err(ExperimentError::Config(format!(
            "site {}: {} training rows and {} test rows after the split",
            series.site.icao,
            train_raw.len(),
            test_raw.len()
        )));
    }
    let scaler = fit_scaler(&train_raw)?;
    let train_scaled = apply_scaler(&scaler, &train_raw)?;
    let model = train_gbdt(&train_scaled, &config.effective_hyperparams())?;
    let climatology = ClimatologyTable::fit(&train_raw)?;
    let logistic = train_logistic(&train_scaled, &config.logistic)?;
    Ok(Trained { model, scaler, test_raw, climatology, logistic })
}

pub const CLIMATOLOGY_FILE: &str = "climatology.json";
pub const LOGISTIC_FILE: &str = "logistic.json";

/// Everything fitted at the training site.
#[derive(Debug, Clone)]
pub struct TrainedArtifacts {
    pub model: GbdtModel,
    pub scaler: ScalerStats,
    pub climatology: ClimatologyTable,
    pub logistic: LinearModel,
    /// Unscaled holdout partition of the training site.
    pub test_raw: FeatureDataset,
}

/// Fits model, scaler and baselines on the training site's training range
/// and writes them under `config.output_dir`.
pub fn train_from_config(config: &ExperimentConfig) -> Result<TrainedArtifacts, ExperimentError> {
    config.validate()?;
    let series = load_site_series(config.train_site()?, config)?;
    train_and_save(&series, config)
}

fn train_and_save(series: &SiteSeries, config: &ExperimentConfig) -> Result<TrainedArtifacts, ExperimentError> {
    let out = &config.output_dir;
    fs::create_dir_all(out)?;
    let t = train_at_site(series, config, config.horizon_h)?;
    t.model.save(&out.join(MODEL_FILE))?;
    t.scaler.save(&out.join(SCALER_FILE))?;
    write_json(&out.join(CLIMATOLOGY_FILE), &t.climatology)?;
    write_json(&out.join(LOGISTIC_FILE), &t.logistic)?;
    Ok(TrainedArtifacts {
        model: t.model,
        scaler: t.scaler,
        climatology: t.climatology,
        logistic: t.logistic,
        test_raw: t.test_raw,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ExperimentError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

/// Evaluates every transfer site with the model and scaler files found in
/// `config.output_dir`, hashing both files before and after. Sites are
/// given in config order, paired with their series.
fn transfer_with_audit(
    config: &ExperimentConfig,
    sites: &[(&SiteConfig, &SiteSeries)],
    climatology: &ClimatologyTable,
    logistic: &LinearModel,
) -> Result<(Vec<SiteResult>, AuditRecord), ExperimentError> {
    let out = &config.output_dir;
    let model_path = out.join(MODEL_FILE);
    let scaler_path = out.join(SCALER_FILE);
    // Transfer sites see only what is on disk.
    let model_before = sha256_file(&model_path)?;
    let scaler_before = sha256_file(&scaler_path)?;
    let frozen_model = GbdtModel::load(&model_path)?;
    let frozen_scaler = ScalerStats::load(&scaler_path)?;
    let mut results = Vec::new();
    for (site, s) in sites {
        if site.role != SiteRole::Transfer {
            continue;
        }
        let raw = assemble_features(s, config.horizon_h)?;
        let result = evaluate_site(
            &frozen_model,
            &frozen_scaler,
            climatology,
            logistic,
            &raw,
            SiteRole::Transfer,
            config.threshold,
        )?;
        write_site(out, &result)?;
        results.push(result);
    }
    let audit = AuditRecord {
        model_sha256_before: model_before,
        model_sha256_after: sha256_file(&model_path)?,
        scaler_sha256_before: scaler_before,
        scaler_sha256_after: sha256_file(&scaler_path)?,
        transfer_sites: results.iter().map(|r| r.icao.clone()).collect(),
    };
    write_json(&out.join("audit.json"), &audit)?;
    if !audit.unchanged() {
        return Err(ExperimentError::Invariant("model or scaler file changed during transfer evaluation".into()));
    }
    Ok((results, audit))
}

/// Zero-shot evaluation of the transfer sites against artifacts written
/// earlier by [`train_from_config`] into `config.output_dir`.
pub fn transfer_from_disk(config: &ExperimentConfig) -> Result<(Vec<SiteResult>, AuditRecord), ExperimentError> {
    config.validate()?;
    let out = &config.output_dir;
    let climatology: ClimatologyTable = read_json(&out.join(CLIMATOLOGY_FILE))?;
    let logistic: LinearModel = read_json(&out.join(LOGISTIC_FILE))?;
    let transfer: Vec<&SiteConfig> = config.sites.iter().filter(|s| s.role == SiteRole::Transfer).collect();
    let series: Vec<SiteSeries> =
        transfer.par_iter().map(|s| load_site_series(s, config)).collect::<Result<_, _>>()?;
    let pairs: Vec<(&SiteConfig, &SiteSeries)> = transfer.into_iter().zip(&series).collect();
    transfer_with_audit(config, &pairs, &climatology, &logistic)
}

/// Runs the full protocol and writes every artifact under
/// `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentBundle, ExperimentError> {
    config.validate()?;
    let out = &config.output_dir;
    fs::create_dir_all(out)?;

    let series: Vec<SiteSeries> =
        config.sites.par_iter().map(|s| load_site_series(s, config)).collect::<Result<_, _>>()?;
    let train_idx = config.sites.iter().position(|s| s.role == SiteRole::Train).expect("validated");

    let trained = train_and_save(&series[train_idx], config)?;
    let holdout_result = evaluate_site(
        &trained.model,
        &trained.scaler,
        &trained.climatology,
        &trained.logistic,
        &trained.test_raw,
        SiteRole::Train,
        config.threshold,
    )?;
    write_site(out, &holdout_result)?;

    let pairs: Vec<(&SiteConfig, &SiteSeries)> = config.sites.iter().zip(&series).collect();
    let (transfer_results, audit) = transfer_with_audit(config, &pairs, &trained.climatology, &trained.logistic)?;

    let summary: Vec<SiteSummary> =
        std::iter::once(&holdout_result).chain(&transfer_results).map(SiteSummary::from).collect();
    write_json(&out.join("summary.json"), &summary)?;

    let holdout = apply_scaler(&trained.scaler, &trained.test_raw)?;
    Ok(ExperimentBundle {
        model: trained.model,
        scaler: trained.scaler,
        holdout,
        holdout_result,
        transfer_results,
        audit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub horizon_h: u32,
    pub auc: Option<f64>,
    pub auprc: Option<f64>,
    pub mcc: f64,
    pub f1: f64,
    pub importance: ImportanceRanking,
}

/// Retrains and evaluates the training site at each horizon. Writes
/// `sweep.csv` and per-horizon importance files under
/// `<output_dir>/sweep`.
pub fn horizon_sweep(config: &ExperimentConfig, horizons: &[u32]) -> Result<Vec<HorizonResult>, ExperimentError> {
    config.validate()?;
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(ExperimentError::Config("horizons must be non-empty and at least 1".into()));
    }
    let site = config.train_site()?;
    let series = load_site_series(site, config)?;
    let dir = config.output_dir.join("sweep");
    fs::create_dir_all(&dir)?;

    let mut results = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let t = train_at_site(&series, config, h)?;
        let r = evaluate_site(&t.model, &t.scaler, &t.climatology, &t.logistic, &t.test_raw, SiteRole::Train, config.threshold)?;
        r.importance.write_csv(BufWriter::new(File::create(dir.join(format!("importance_h{h}.csv")))?))?;
        results.push(HorizonResult {
            horizon_h: h,
            auc: r.report.auc,
            auprc: r.report.auprc,
            mcc: r.report.mcc,
            f1: r.report.f1,
            importance: r.importance,
        });
    }

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("sweep.csv"))?));
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    w.write_record(["horizon_h", "auc", "auprc", "mcc", "f1"]).map_err(crate::eval::EvalError::from)?;
    for r in &results {
        w.write_record([r.horizon_h.to_string(), opt(r.auc), opt(r.auprc), r.mcc.to_string(), r.f1.to_string()])
            .map_err(crate::eval::EvalError::from)?;
    }
    w.flush()?;
    Ok(results)
}
