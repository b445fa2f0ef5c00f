use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fits(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fits"))
        .args(args)
        .env_remove("FITS_DATA_ROOT")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_dir(out: &Output) -> PathBuf {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    PathBuf::from(String::from_utf8(out.stdout.clone()).unwrap().trim())
}

fn fixture(dir: &Path) -> PathBuf {
    let path = dir.join("series.csv");
    let mut text = String::from("date,a,b\n");
    for t in 0..500 {
        let x = t as f64;
        let a = (2.0 * std::f64::consts::PI * x / 24.0).sin() + 0.1 * ((x * 7.3).sin());
        let b = 0.5 * (2.0 * std::f64::consts::PI * x / 12.0).cos() + 0.01 * x;
        text.push_str(&format!("2020-01-01 {t:04},{a},{b}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_writes_aligned_deterministic_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let a = run_dir(&fits(&["synth", "--out", out, "--seed", "3"]));
    let b = run_dir(&fits(&["synth", "--out", out, "--seed", "3"]));
    assert_ne!(a, b);
    let values = fs::read_to_string(a.join("synth_values.csv")).unwrap();
    let labels = fs::read_to_string(a.join("synth_labels.csv")).unwrap();
    assert_eq!(values.lines().count(), 4001);
    assert_eq!(labels.lines().count(), 4000);
    assert_eq!(values, fs::read_to_string(b.join("synth_values.csv")).unwrap());
    assert_eq!(labels, fs::read_to_string(b.join("synth_labels.csv")).unwrap());
}

#[test]
fn train_writes_artifacts_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let cfg = write_config(
        tmp.path(),
        "train.cfg",
        &format!(
            "data = {}\nperiod = 24\nlook_back = 48\nhorizon = 12\nharmonic = 2\nsupervision = B+F\nmax_epochs = 4\nbatch_size = 32\n",
            data.display()
        ),
    );
    let out = tmp.path().join("runs");
    let args = ["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "0,1"];
    let first = run_dir(&fits(&args));
    for f in ["model.ckpt", "history.csv", "metrics.json", "seed-0/model.ckpt", "seed-1/history.csv"] {
        assert!(first.join(f).is_file(), "{f}");
    }
    let history = fs::read_to_string(first.join("history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_mse,val_mse\n"));

    let m = json(&first.join("metrics.json"));
    let seeds = m["seeds"].as_array().unwrap();
    assert_eq!(seeds.len(), 2);
    let tests: Vec<f64> = seeds.iter().map(|s| s["test_mse"].as_f64().unwrap()).collect();
    assert!(tests.iter().all(|v| v.is_finite()));
    let mean = (tests[0] + tests[1]) / 2.0;
    let std = (((tests[0] - mean).powi(2) + (tests[1] - mean).powi(2)) / 2.0).sqrt();
    assert!((m["mean"]["test_mse"].as_f64().unwrap() - mean).abs() < 1e-15);
    assert!((m["std"]["test_mse"].as_f64().unwrap() - std).abs() < 1e-15);

    let second = run_dir(&fits(&args));
    assert_ne!(first, second);
    assert_eq!(
        fs::read(first.join("metrics.json")).unwrap(),
        fs::read(second.join("metrics.json")).unwrap()
    );

    // eval on the saved first-seed checkpoint reproduces its metrics
    let eval_cfg = write_config(
        tmp.path(),
        "eval.cfg",
        &format!(
            "data = {}\nperiod = 24\ncheckpoint = {}\n",
            data.display(),
            first.join("model.ckpt").display()
        ),
    );
    let ev = run_dir(&fits(&["eval", "--config", eval_cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let e = json(&ev.join("metrics.json"));
    assert_eq!(e["test_mse"], seeds[0]["test_mse"]);
    assert_eq!(e["val_mae"], seeds[0]["val_mae"]);
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let bad = write_config(tmp.path(), "bad.cfg", "look_back = 48\nhorizon = 12\nwarmup = 3\n");
    let o = fits(&["train", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `warmup`"));

    let o = fits(&["train", "--out", out, "--set", "horizon=12"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fits(&["detect", "--train-first", "--out", out, "--set", "window=201", "--set", "factor=4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not divisible"));
    let o = fits(&["synth", "--out", out, "--set", "len=10"]);
    assert_eq!(o.status.code(), Some(2));
    // nothing published for failed runs
    assert!(fs::read_dir(tmp.path()).unwrap().all(|e| {
        let name = e.unwrap().file_name();
        name == "bad.cfg" || name.to_string_lossy().starts_with('.')
    }));
}

#[test]
fn non_finite_data_exits_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let text = fs::read_to_string(&data).unwrap().replacen(",0.01,", ",NaN,", 1);
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    lines[10] = "2020-01-01 x,NaN,1.0".into();
    fs::write(&data, lines.join("\n") + "\n").unwrap();
    let o = fits(&[
        "train",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        &format!("data={}", data.display()),
        "--set",
        "period=24",
        "--set",
        "look_back=48",
        "--set",
        "horizon=12",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn grid_selects_argmin_and_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let body = format!(
        "data = {}\nperiod = 24\nhorizon = 12\nlook_backs = 24, 48\nharmonics = 1, none\nmax_epochs = 3\nseeds = 0\n",
        data.display()
    );
    let cfg = write_config(tmp.path(), "grid.cfg", &body);
    let out = tmp.path().join("runs");
    let dir = run_dir(&fits(&["grid", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let grid = fs::read_to_string(dir.join("grid.csv")).unwrap();
    let rows: Vec<Vec<String>> = grid
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    let best = rows
        .iter()
        .min_by(|a, b| a[3].parse::<f64>().unwrap().total_cmp(&b[3].parse::<f64>().unwrap()))
        .unwrap();
    let selected = json(&dir.join("selected.json"));
    assert_eq!(selected["look_back"].as_u64().unwrap().to_string(), best[0]);
    assert_eq!(selected["val_mse"].as_f64().unwrap(), best[3].parse::<f64>().unwrap());

    // cached rows are taken as-is: a doctored row survives the rerun
    let doctored = grid.replacen(&best[4], "1.2345e4", 1);
    let cached = tmp.path().join("cached.csv");
    fs::write(&cached, &doctored).unwrap();
    let resumed = run_dir(&fits(&[
        "grid",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        &format!("resume={}", cached.display()),
    ]));
    assert_eq!(fs::read_to_string(resumed.join("grid.csv")).unwrap(), doctored);
}

#[test]
fn detect_end_to_end_on_synthetic_data() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let synth = run_dir(&fits(&["synth", "--out", out.to_str().unwrap(), "--set", "len=1600"]));
    let cfg = write_config(
        tmp.path(),
        "detect.cfg",
        &format!(
            "data = {}\nlabels = {}\ntrain_rows = 1000\nwindow = 80\nfactor = 4\nmax_epochs = 5\nwrite_scores = true\n",
            synth.join("synth_values.csv").display(),
            synth.join("synth_labels.csv").display()
        ),
    );
    let o = fits(&["detect", "--train-first", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let dir = run_dir(&o);
    let report = json(&dir.join("report.json"));
    for key in ["threshold", "precision", "recall", "f1", "accuracy", "window", "factor", "params"] {
        assert!(report.get(key).is_some(), "{key}");
    }
    let f1 = report["f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
    assert_eq!(report["window"], 80);
    assert_eq!(report["params"], 10 * 40 + 40);
    let scores = fs::read_to_string(dir.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 1601);

    // the saved checkpoint can be reused without retraining
    let reuse = run_dir(&fits(&[
        "detect",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        &format!("checkpoint={}", dir.join("model.ckpt").display()),
    ]));
    assert_eq!(json(&reuse.join("report.json")), report);
}
