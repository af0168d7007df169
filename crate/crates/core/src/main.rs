//! `fogcast` command-line interface.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
//! invariant violation.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{Datelike, NaiveDate, Timelike};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fogcast::eval::{calibrate_threshold, classification_report, CalibrationObjective};
use fogcast::experiment::{
    emit_curves, horizon_sweep, load_site_series, run_experiment, synthesize_site, train_from_config,
    transfer_from_disk, ExperimentConfig, ExperimentError, Regime, SiteResult, SyntheticSiteSpec, MODEL_FILE,
    SCALER_FILE,
};
use fogcast::explain::{importance_from_explanations, write_explanations_csv, TreeExplainer};
use fogcast::features::{apply_scaler, assemble_features, FeatureDataset, ScalerStats};
use fogcast::gbdt::GbdtModel;
use fogcast::ingest::{load_asos_csv, load_era5_csv, load_metar_text, Loaded, MetarRecord, SiteSeries};

#[derive(Parser)]
#[command(name = "fogcast", version, about = "Coordinate-free airport fog nowcasting")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. When a config is also given, flags win.
#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (or file, for single-output commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Forecast horizon in hours.
    #[arg(long, global = true)]
    horizon: Option<u32>,
    /// Decision threshold on the fog probability.
    #[arg(long, global = true)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Decode METAR reports (ASOS CSV or one raw report per line) to CSV.
    IngestMetar {
        #[arg(long)]
        input: PathBuf,
        /// Year and month (YYYY-MM) for raw reports without an archive stamp.
        #[arg(long)]
        month: Option<String>,
    },
    /// Validate a reanalysis export and write it with a wind-speed column.
    IngestEra5 {
        #[arg(long)]
        input: PathBuf,
    },
    /// Build the feature table of every configured site.
    Featurize,
    /// Train model, scaler and baselines at the training site.
    Train,
    /// Score a feature table with a saved model and scaler.
    Evaluate(ModelInputs),
    /// Zero-shot evaluation of the transfer sites with the saved artifacts.
    Transfer,
    /// Per-row SHAP values and global importance for a feature table.
    Explain(ModelInputs),
    /// Pick a decision threshold on a feature table.
    Calibrate {
        #[command(flatten)]
        inputs: ModelInputs,
        #[arg(long, value_enum, default_value = "max-f1")]
        objective: Objective,
        /// Target recall for `min-recall`.
        #[arg(long)]
        recall: Option<f64>,
    },
    /// Retrain and evaluate the training site at several horizons.
    Sweep {
        /// Comma-separated horizons; defaults to the config's or 2,3,6.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<u32>,
    },
    /// Generate a synthetic site as ASOS and reanalysis CSV files.
    Synth {
        #[arg(long, default_value = "SYNT")]
        icao: String,
        #[arg(long, allow_negative_numbers = true)]
        lat: f64,
        #[arg(long, allow_negative_numbers = true)]
        lon: f64,
        #[arg(long, default_value_t = 1096)]
        days: u32,
        #[arg(long, default_value_t = 0.6)]
        propensity: f64,
        #[arg(long, value_enum, default_value = "radiative")]
        regime: RegimeArg,
        /// First day (YYYY-MM-DD).
        #[arg(long)]
        start: Option<NaiveDate>,
    },
    /// Full experiment: train, holdout, transfer, baselines, importance.
    Run,
}

#[derive(Args)]
struct ModelInputs {
    /// Feature table written by `featurize` (unscaled).
    #[arg(long)]
    features: PathBuf,
    /// Defaults to `<out>/model.json`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Defaults to `<out>/scaler.json`.
    #[arg(long)]
    scaler: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    MaxF1,
    MinRecall,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Radiative,
    RareEvent,
}

type CliResult = Result<(), ExperimentError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult {
    let c = &cli.common;
    match &cli.command {
        Command::IngestMetar { input, month } => ingest_metar(c, input, month.as_deref()),
        Command::IngestEra5 { input } => ingest_era5(c, input),
        Command::Featurize => featurize(c),
        Command::Train => train(c),
        Command::Evaluate(inputs) => evaluate(c, inputs),
        Command::Transfer => transfer(c),
        Command::Explain(inputs) => explain(c, inputs),
        Command::Calibrate { inputs, objective, recall } => calibrate(c, inputs, *objective, *recall),
        Command::Sweep { horizons } => sweep(c, horizons),
        Command::Synth { icao, lat, lon, days, propensity, regime, start } => {
            let spec = SyntheticSiteSpec {
                icao: icao.clone(),
                lat_deg: *lat,
                lon_deg: *lon,
                elevation_m: 0.0,
                n_days: *days,
                seed: c.seed.unwrap_or(0),
                fog_propensity: *propensity,
                regime: match regime {
                    RegimeArg::Radiative => Regime::Radiative,
                    RegimeArg::RareEvent => Regime::RareEvent,
                },
                start: start.unwrap_or_else(|| NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid date")),
            };
            synth(c, &spec)
        }
        Command::Run => run(c),
    }
}

fn config_error(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

/// Loads the config and applies flag overrides.
fn load_config(c: &Common) -> Result<ExperimentConfig, ExperimentError> {
    let path = c.config.as_ref().ok_or_else(|| config_error("--config is required for this command"))?;
    let mut cfg = ExperimentConfig::from_json_file(path)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    if let Some(h) = c.horizon {
        cfg.horizon_h = h;
    }
    if let Some(t) = c.threshold {
        cfg.threshold = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(c: &Common) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from("fogcast-out"))
}

fn threshold(c: &Common) -> f64 {
    c.threshold.unwrap_or(fogcast::eval::DEFAULT_THRESHOLD)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Invariant(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn report_rejections<T>(what: &str, loaded: &Loaded<T>) {
    let total = loaded.records.len() + loaded.row_errors.len();
    eprintln!("{what}: {} of {total} rows kept", loaded.records.len());
    for e in loaded.row_errors.iter().take(10) {
        eprintln!("  row {}: {}", e.row, e.reason);
    }
    if loaded.row_errors.len() > 10 {
        eprintln!("  ... {} more", loaded.row_errors.len() - 10);
    }
}

fn ingest_metar(c: &Common, input: &Path, month: Option<&str>) -> CliResult {
    let loaded = if input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        load_asos_csv(File::open(input)?)?
    } else {
        let month = month.ok_or_else(|| config_error("--month YYYY-MM is required for raw report files"))?;
        let first = NaiveDate::parse_from_str(&format!("{month}-01"), "%Y-%m-%d")
            .map_err(|e| config_error(format!("--month {month}: {e}")))?;
        load_metar_text(BufReader::new(File::open(input)?), first)?
    };
    report_rejections("reports", &loaded);
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("metar.csv"));
    write_records(&out, &loaded.records)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_records(path: &Path, records: &[MetarRecord]) -> CliResult {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let csv_err = |e: csv::Error| ExperimentError::Io(e.into());
    w.write_record(["station", "timestamp", "visibility_km", "temp_c", "dewpoint_c", "wind_speed_mps", "pressure_hpa"])
        .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.station.clone(),
            r.timestamp.to_rfc3339(),
            opt(r.visibility_km),
            opt(r.temp_c),
            opt(r.dewpoint_c),
            opt(r.wind_speed_mps),
            opt(r.pressure_hpa),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn ingest_era5(c: &Common, input: &Path) -> CliResult {
    let loaded = load_era5_csv(File::open(input)?)?;
    report_rejections("reanalysis", &loaded);
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("era5.csv"));
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out)?));
    let csv_err = |e: csv::Error| ExperimentError::Io(e.into());
    w.write_record(["time", "t2m_c", "d2m_c", "ws10_mps", "sp_hpa", "lcc_frac", "t950_c"]).map_err(csv_err)?;
    for r in &loaded.records {
        w.write_record([
            r.timestamp.to_rfc3339(),
            r.t2m_c.to_string(),
            r.d2m_c.to_string(),
            r.ws10_mps.to_string(),
            r.sp_hpa.to_string(),
            r.lcc_frac.to_string(),
            r.t950_c.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn featurize(c: &Common) -> CliResult {
    let cfg = load_config(c)?;
    for site in &cfg.sites {
        let series = load_site_series(site, &cfg)?;
        let ds = assemble_features(&series, cfg.horizon_h)?;
        let dir = cfg.output_dir.join(&site.icao);
        fs::create_dir_all(&dir)?;
        let path = dir.join("features.csv");
        ds.write_csv(&path)?;
        println!("{}: {} rows, base rate {:.5} -> {}", site.icao, ds.len(), ds.base_rate(), path.display());
    }
    Ok(())
}

fn train(c: &Common) -> CliResult {
    let cfg = load_config(c)?;
    let t = train_from_config(&cfg)?;
    println!(
        "trained {} trees on {} rows; artifacts in {}",
        t.model.trees().len(),
        t.model.metadata.train_rows,
        cfg.output_dir.display()
    );
    Ok(())
}

struct ScoredInputs {
    model: GbdtModel,
    scaled: FeatureDataset,
}

fn load_inputs(c: &Common, inputs: &ModelInputs) -> Result<ScoredInputs, ExperimentError> {
    let dir = out_dir(c);
    let model = GbdtModel::load(&inputs.model.clone().unwrap_or_else(|| dir.join(MODEL_FILE)))?;
    let scaler = ScalerStats::load(&inputs.scaler.clone().unwrap_or_else(|| dir.join(SCALER_FILE)))?;
    let raw = FeatureDataset::read_csv(&inputs.features)?;
    let scaled = apply_scaler(&scaler, &raw)?;
    Ok(ScoredInputs { model, scaled })
}

fn evaluate(c: &Common, inputs: &ModelInputs) -> CliResult {
    let l = load_inputs(c, inputs)?;
    let scores = l.model.predict_proba_rows(l.scaled.rows())?;
    let report = classification_report(&scores, l.scaled.labels(), threshold(c))?;
    let dir = out_dir(c).join("evaluate");
    fs::create_dir_all(&dir)?;
    write_json(&dir.join("report.json"), &report)?;
    emit_curves(&report, &dir)?;
    println!(
        "n={} auc={} auprc={} f1={:.4} mcc={:.4}",
        report.n,
        opt(report.auc),
        opt(report.auprc),
        report.f1,
        report.mcc
    );
    Ok(())
}

fn print_site(r: &SiteResult) {
    println!(
        "{:<6} {:?}  n={} base_rate={:.5} auc={} persistence={} climatology={} logistic={} top={}",
        r.icao,
        r.role,
        r.report.n,
        r.report.base_rate,
        opt(r.report.auc),
        opt(r.baselines.persistence_binary_auc),
        opt(r.baselines.climatology_auc),
        opt(r.baselines.logistic_auc),
        r.importance.top().feature
    );
}

fn transfer(c: &Common) -> CliResult {
    let cfg = load_config(c)?;
    let (results, audit) = transfer_from_disk(&cfg)?;
    results.iter().for_each(print_site);
    println!("audit: model and scaler unchanged = {}", audit.unchanged());
    Ok(())
}

fn explain(c: &Common, inputs: &ModelInputs) -> CliResult {
    let l = load_inputs(c, inputs)?;
    let explanations = TreeExplainer::new(&l.model)?.explain_dataset(&l.scaled)?;
    let dir = out_dir(c).join("explain");
    fs::create_dir_all(&dir)?;
    write_explanations_csv(BufWriter::new(File::create(dir.join("shap.csv"))?), l.scaled.timestamps(), &explanations)?;
    let ranking = importance_from_explanations(&explanations)?;
    ranking.write_csv(BufWriter::new(File::create(dir.join("importance.csv"))?))?;
    for (i, e) in ranking.entries.iter().take(10).enumerate() {
        println!("{:>2} {:<32} {:.5}", i + 1, e.feature, e.mean_abs_shap);
    }
    Ok(())
}

fn calibrate(c: &Common, inputs: &ModelInputs, objective: Objective, recall: Option<f64>) -> CliResult {
    let objective = match (objective, recall) {
        (Objective::MaxF1, _) => CalibrationObjective::MaxF1,
        (Objective::MinRecall, Some(r)) => CalibrationObjective::MinRecall(r),
        (Objective::MinRecall, None) => return Err(config_error("--recall is required with min-recall")),
    };
    let l = load_inputs(c, inputs)?;
    let scores = l.model.predict_proba_rows(l.scaled.rows())?;
    let cal = calibrate_threshold(&scores, l.scaled.labels(), objective)?;
    let dir = out_dir(c);
    fs::create_dir_all(&dir)?;
    write_json(&dir.join("calibration.json"), &cal)?;
    println!(
        "threshold={} precision={:.4} recall={:.4} f1={:.4}",
        cal.threshold, cal.report.precision, cal.report.recall, cal.report.f1
    );
    Ok(())
}

fn sweep(c: &Common, horizons: &[u32]) -> CliResult {
    let cfg = load_config(c)?;
    let horizons: Vec<u32> = if !horizons.is_empty() {
        horizons.to_vec()
    } else if !cfg.sweep_horizons.is_empty() {
        cfg.sweep_horizons.clone()
    } else {
        vec![2, 3, 6]
    };
    for r in horizon_sweep(&cfg, &horizons)? {
        println!(
            "h={:<2} auc={} auprc={} mcc={:.4} f1={:.4} top={}",
            r.horizon_h,
            opt(r.auc),
            opt(r.auprc),
            r.mcc,
            r.f1,
            r.importance.top().feature
        );
    }
    Ok(())
}

const MILES_PER_KM: f64 = 1.0 / 1.609344;

fn to_fahrenheit(c: f64) -> f64 {
    c * 9.0 / 5.0 + 32.0
}

/// Writes `asos.csv` (reported hours only) and `era5.csv` for a series.
fn export_series(series: &SiteSeries, dir: &Path) -> CliResult {
    fs::create_dir_all(dir)?;
    let mut asos = BufWriter::new(File::create(dir.join("asos.csv"))?);
    writeln!(asos, "station,valid,vsby,tmpf,dwpf,sknt,mslp")?;
    let mut era5 = BufWriter::new(File::create(dir.join("era5.csv"))?);
    writeln!(era5, "time,t2m_c,d2m_c,ws10_mps,sp_hpa,lcc_frac,t950_c")?;
    for r in series.rows() {
        let Some(a) = r.atmosphere else { continue };
        let ts = r.timestamp;
        if r.metar_reported {
            writeln!(
                asos,
                "{},{:04}-{:02}-{:02} {:02}:00,{},{:.1},{:.1},{:.0},{:.1}",
                series.site.icao,
                ts.year(),
                ts.month(),
                ts.day(),
                ts.hour(),
                r.visibility_km * MILES_PER_KM,
                to_fahrenheit(a.t2m_c),
                to_fahrenheit(a.d2m_c),
                a.ws10_mps / 0.514444,
                a.sp_hpa
            )?;
        }
        writeln!(
            era5,
            "{},{},{},{},{},{},{}",
            ts.format("%Y-%m-%dT%H:%M:%SZ"),
            a.t2m_c,
            a.d2m_c,
            a.ws10_mps,
            a.sp_hpa,
            a.lcc_frac,
            a.t950_c
        )?;
    }
    asos.flush()?;
    era5.flush()?;
    Ok(())
}

fn synth(c: &Common, spec: &SyntheticSiteSpec) -> CliResult {
    let series = synthesize_site(spec)?;
    let dir = out_dir(c);
    export_series(&series, &dir)?;
    println!(
        "{}: {} hours, fog base rate {:.5} -> {}",
        spec.icao,
        series.len(),
        fogcast::experiment::fog_base_rate(&series),
        dir.display()
    );
    Ok(())
}

fn run(c: &Common) -> CliResult {
    let cfg = load_config(c)?;
    let bundle = run_experiment(&cfg)?;
    print_site(&bundle.holdout_result);
    bundle.transfer_results.iter().for_each(print_site);
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}
