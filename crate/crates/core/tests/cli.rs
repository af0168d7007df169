use std::path::Path;
use std::process::{Command, Output};

fn fogcast(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fogcast")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(dir: &Path, asos: &Path, era5: &Path, extra: &str) -> String {
    format!(
        r#"{{
  "sites": [
    {{"icao": "TRAN", "lat": -33.4, "lon": -70.8, "role": "train",
      "metar_path": "{}", "era5_path": "{}"}},
    {{"icao": "XFER", "lat": 33.4, "lon": -70.8, "role": "transfer",
      "synthetic": {{"n_days": 120, "seed": 9, "fog_propensity": 0.6, "regime": "radiative", "start": "2010-03-01"}}}}
  ],
  "train_range": {{"start": "2010-01-01T00:00:00Z", "end": "2010-09-01T00:00:00Z"}},
  "test_range": {{"start": "2010-09-01T00:00:00Z", "end": "2011-03-01T00:00:00Z"}},
  "hyperparams": {{"n_estimators": 30{extra}}},
  "output_dir": "{}"
}}"#,
        asos.display(),
        era5.display(),
        dir.join("out").display()
    )
}

#[test]
fn full_workflow_from_exported_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let o = fogcast(&["synth", "--icao", "TRAN", "--lat", "-33.4", "--lon", "-70.8", "--days", "400", "--seed", "3", "--out", "site"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (asos, era5) = (dir.join("site/asos.csv"), dir.join("site/era5.csv"));
    assert!(asos.exists() && era5.exists());

    let cfg = dir.join("experiment.json");
    std::fs::write(&cfg, config(dir, &asos, &era5, "")).unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = fogcast(&["run", "--config", cfg], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("TRAN") && stdout.contains("XFER"), "{stdout}");
    for f in ["model.json", "scaler.json", "audit.json", "summary.json", "TRAN/report.json", "XFER/roc.csv"] {
        assert!(dir.join("out").join(f).exists(), "{f} missing");
    }

    let o = fogcast(&["featurize", "--config", cfg], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let features = dir.join("out/XFER/features.csv");
    assert!(features.exists());
    let features = features.to_str().unwrap();
    let out = dir.join("out");
    let out = out.to_str().unwrap();

    for args in [
        vec!["evaluate", "--features", features, "--out", out],
        vec!["explain", "--features", features, "--out", out],
        vec!["calibrate", "--features", features, "--out", out],
        vec!["calibrate", "--features", features, "--out", out, "--objective", "min-recall", "--recall", "0.8"],
        vec!["transfer", "--config", cfg],
    ] {
        let o = fogcast(&args, dir);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    }
    assert!(dir.join("out/evaluate/report.json").exists());
    assert!(dir.join("out/explain/shap.csv").exists());
    assert!(dir.join("out/calibration.json").exists());

    let o = fogcast(&["sweep", "--config", cfg, "--horizons", "2,6"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.join("out/sweep/sweep.csv").exists());
}

#[test]
fn ingest_commands_normalize_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/metar_corpus.txt");
    let o = fogcast(&["ingest-metar", "--input", corpus.to_str().unwrap(), "--month", "2011-07", "--out", "m.csv"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = std::fs::read_to_string(dir.join("m.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 249);
    assert!(stderr(&o).contains("249 of 250"));

    std::fs::write(dir.join("e.csv"), "time,t2m_c,d2m_c,sp_hpa,lcc_frac,t950_c,u10_mps,v10_mps\n2012-01-01T00:00:00Z,5,4,1010,0.5,6,3,4\n").unwrap();
    let o = fogcast(&["ingest-era5", "--input", "e.csv", "--out", "era.csv"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(std::fs::read_to_string(dir.join("era.csv")).unwrap().contains(",5,1010,"));
}

#[test]
fn exit_codes_separate_config_and_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    // configuration problems exit with 2
    let o = fogcast(&["run"], dir);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).starts_with("error: "));
    assert_eq!(code(&fogcast(&["run", "--config", "absent.json"], dir)), 2);
    std::fs::write(dir.join("broken.json"), "{").unwrap();
    assert_eq!(code(&fogcast(&["train", "--config", "broken.json"], dir)), 2);
    let bad_hp = config(dir, &dir.join("a.csv"), &dir.join("e.csv"), r#", "learning_rate": -1.0"#);
    std::fs::write(dir.join("bad_hp.json"), bad_hp).unwrap();
    assert_eq!(code(&fogcast(&["train", "--config", "bad_hp.json"], dir)), 2);
    assert_eq!(code(&fogcast(&["ingest-metar", "--input", "x.txt"], dir)), 2);
    assert_eq!(code(&fogcast(&["calibrate", "--features", "f.csv", "--objective", "min-recall"], dir)), 2);
    // argument parsing errors share the code
    assert_eq!(code(&fogcast(&["no-such-command"], dir)), 2);

    // data problems exit with 3
    let o = fogcast(&["evaluate", "--features", "absent.csv"], dir);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    std::fs::write(dir.join("nohdr.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(code(&fogcast(&["ingest-era5", "--input", "nohdr.csv"], dir)), 3);
}
