use std::path::{Path, PathBuf};
use std::sync::Mutex;

use ndarray::s;
use serde::Serialize;

use super::config::RunConfig;
use super::run_dir::{write_json, RunDir};
use crate::anomaly::{
    reconstruction_spec, score_series, select_threshold, train_reconstruction, AnomalyScores,
    DetectionReport, DEFAULT_FACTOR, DEFAULT_VAL_FRACTION, DEFAULT_WINDOW,
};
use crate::data::{
    load_csv, load_labels, split_label_column, synth_anomaly, write_labels, write_values_csv, DatasetProfile,
    LabeledSeries, SplitRule, SynthConfig,
};
use crate::error::{FitsError, Result};
use crate::model::{load_checkpoint, save_checkpoint, FitsConfig, Supervision};
use crate::training::{
    evaluate, grid_search, read_grid_csv, run_forecast, write_grid_csv, write_history_csv, ForecastTask,
    GridAxes, GridRow, SeedRun, Split, TrainSpec,
};

fn config_err(msg: impl Into<String>) -> FitsError {
    FitsError::Config(msg.into())
}

/// Profile from `profile`, with `period` and `split` overriding it.
fn dataset_profile(cfg: &RunConfig) -> Result<DatasetProfile> {
    let name = cfg.string("profile");
    let builtin = match &name {
        Some(n) => Some(DatasetProfile::builtin(n).ok_or_else(|| config_err(format!("unknown profile `{n}`")))?),
        None => None,
    };
    let period = match (cfg.get("period"), &builtin) {
        (Some(_), _) => cfg.require_usize("period")?,
        (None, Some(p)) => p.period,
        (None, None) => return Err(config_err("set `profile` or `period`")),
    };
    let split = match (cfg.get("split"), &builtin) {
        (Some(v), _) => v.parse()?,
        (None, Some(p)) => p.split,
        (None, None) => SplitRule::Ratio70_10_20,
    };
    DatasetProfile::new(name.unwrap_or_else(|| "custom".into()), period, split)
        .map_err(|e| config_err(e.to_string()))
}

fn load_task(cfg: &RunConfig) -> Result<(ForecastTask, DatasetProfile, PathBuf)> {
    let profile = dataset_profile(cfg)?;
    let path = cfg.data_path("data")?;
    let timestamp = cfg.bool_or("timestamp", true)?;
    let frame = load_csv(&path, timestamp)?;
    let task = ForecastTask::prepare(frame.values.view(), &profile)?;
    Ok((task, profile, path))
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct SplitMetrics {
    pub val_mse: f64,
    pub val_mae: f64,
    pub test_mse: f64,
    pub test_mae: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SeedMetrics {
    pub seed: u64,
    pub best_epoch: usize,
    pub epochs_ran: usize,
    #[serde(flatten)]
    pub metrics: SplitMetrics,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ModelSummary {
    pub input_len: usize,
    pub output_len: usize,
    pub horizon: usize,
    pub period: usize,
    pub harmonic: Option<usize>,
    pub k_cut: usize,
    pub supervision: String,
    pub channels: usize,
    pub complex_params: usize,
    pub real_params: usize,
}

impl ModelSummary {
    fn of(cfg: &FitsConfig) -> Self {
        let (complex_params, real_params) = cfg.param_count();
        Self {
            input_len: cfg.input_len,
            output_len: cfg.output_len,
            horizon: cfg.horizon(),
            period: cfg.period,
            harmonic: cfg.harmonic,
            k_cut: cfg.k_cut,
            supervision: cfg.supervision.as_str().to_owned(),
            channels: cfg.channels,
            complex_params,
            real_params,
        }
    }
}

/// `metrics.json`: per-seed entries plus their mean and population
/// standard deviation.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetricsReport {
    pub dataset: String,
    pub model: ModelSummary,
    pub seeds: Vec<SeedMetrics>,
    pub mean: SplitMetrics,
    pub std: SplitMetrics,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn summarize(dataset: &str, cfg: &FitsConfig, runs: &[SeedRun]) -> MetricsReport {
    let seeds: Vec<SeedMetrics> = runs
        .iter()
        .map(|r| SeedMetrics {
            seed: r.seed,
            best_epoch: r.best_epoch,
            epochs_ran: r.history.len(),
            metrics: SplitMetrics {
                val_mse: r.val.mse,
                val_mae: r.val.mae,
                test_mse: r.test.mse,
                test_mae: r.test.mae,
            },
        })
        .collect();
    let stat = |f: fn(&SplitMetrics) -> f64| mean_std(&seeds.iter().map(|s| f(&s.metrics)).collect::<Vec<_>>());
    let (vm, vs) = stat(|m| m.val_mse);
    let (va, vas) = stat(|m| m.val_mae);
    let (tm, ts) = stat(|m| m.test_mse);
    let (ta, tas) = stat(|m| m.test_mae);
    MetricsReport {
        dataset: dataset.to_owned(),
        model: ModelSummary::of(cfg),
        seeds,
        mean: SplitMetrics {
            val_mse: vm,
            val_mae: va,
            test_mse: tm,
            test_mae: ta,
        },
        std: SplitMetrics {
            val_mse: vs,
            val_mae: vas,
            test_mse: ts,
            test_mae: tas,
        },
    }
}

/// Trains one model per seed. `model.ckpt` and `history.csv` hold the
/// first seed; every seed also gets `seed-<n>/`.
pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let look_back = cfg.require_usize("look_back")?;
    let horizon = cfg.require_usize("horizon")?;
    let harmonic = cfg.harmonic("harmonic")?;
    let supervision = cfg.supervision_or("supervision", Supervision::BackcastAndForecast)?;
    let spec = cfg.train_spec(TrainSpec::default())?;
    let (task, profile, _) = load_task(cfg)?;
    let model_cfg = task
        .config(look_back, horizon, harmonic, supervision)
        .map_err(|e| config_err(e.to_string()))?;

    let runs = run_forecast(&task, &model_cfg, &spec)?;
    let dir = RunDir::create(out, "train")?;
    std::fs::write(dir.file("config.txt"), cfg.render()).map_err(|e| FitsError::io(dir.file("config.txt"), e))?;
    for (i, run) in runs.iter().enumerate() {
        if i == 0 {
            save_checkpoint(&dir.file("model.ckpt"), &model_cfg, &run.layer)?;
            write_history_csv(&dir.file("history.csv"), &run.history)?;
        }
        if runs.len() > 1 {
            let sub = dir.file(&format!("seed-{}", run.seed));
            std::fs::create_dir(&sub).map_err(|e| FitsError::io(&sub, e))?;
            save_checkpoint(&sub.join("model.ckpt"), &model_cfg, &run.layer)?;
            write_history_csv(&sub.join("history.csv"), &run.history)?;
        }
    }
    write_json(&dir.file("metrics.json"), &summarize(&profile.name, &model_cfg, &runs))?;
    dir.finish()
}

#[derive(Debug, Clone, Serialize)]
struct SelectedRow<'a> {
    dataset: &'a str,
    horizon: usize,
    look_back: usize,
    harmonic: Option<usize>,
    supervision: &'static str,
    val_mse: f64,
    test_mse: f64,
    complex_entries: usize,
    epochs_ran: usize,
}

/// Grid over look-backs, harmonics and supervision modes. Rows finished so
/// far are appended to `grid.csv` in the staging directory; `resume`
/// points at such a file to skip completed combinations.
pub fn cmd_grid(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let horizon = cfg.require_usize("horizon")?;
    let look_backs: Vec<usize> = cfg.list("look_backs")?.unwrap_or_else(|| vec![90, 180, 360, 720]);
    let harmonics = cfg
        .harmonics("harmonics")?
        .ok_or_else(|| config_err("missing required key `harmonics`"))?;
    let supervisions: Vec<Supervision> = cfg
        .list("supervisions")?
        .unwrap_or_else(|| vec![Supervision::BackcastAndForecast]);
    let spec = cfg.train_spec(TrainSpec::default())?;
    let cached = match cfg.get("resume") {
        Some(p) => read_grid_csv(Path::new(p))?,
        None => Vec::new(),
    };
    let (task, profile, _) = load_task(cfg)?;
    for &l in &look_backs {
        task.config(l, horizon, None, Supervision::BackcastAndForecast)
            .map_err(|e| config_err(e.to_string()))?;
    }

    let dir = RunDir::create(out, "grid")?;
    std::fs::write(dir.file("config.txt"), cfg.render()).map_err(|e| FitsError::io(dir.file("config.txt"), e))?;
    let partial = dir.file("grid.csv");
    let done: Mutex<Vec<GridRow>> = Mutex::new(cached.clone());
    let record = |row: &GridRow| -> Result<()> {
        let mut rows = done.lock().expect("grid rows");
        rows.push(row.clone());
        write_grid_csv(&partial, &rows)
    };
    let axes = GridAxes {
        horizon,
        look_backs,
        harmonics,
        supervisions,
    };
    let result = grid_search(&task, &axes, &spec, &cached, &record)?;
    write_grid_csv(&partial, &result.rows)?;
    let best = result.best();
    write_json(
        &dir.file("selected.json"),
        &SelectedRow {
            dataset: &profile.name,
            horizon,
            look_back: best.look_back,
            harmonic: best.harmonic,
            supervision: best.supervision.as_str(),
            val_mse: best.val_mse,
            test_mse: best.test_mse,
            complex_entries: best.complex_entries,
            epochs_ran: best.epochs_ran,
        },
    )?;
    dir.finish()
}

#[derive(Debug, Clone, Serialize)]
struct EvalReport {
    dataset: String,
    checkpoint: String,
    model: ModelSummary,
    #[serde(flatten)]
    metrics: SplitMetrics,
}

/// Scores a saved checkpoint on the validation and test splits.
pub fn cmd_eval(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let ckpt = cfg
        .get("checkpoint")
        .map(PathBuf::from)
        .ok_or_else(|| config_err("missing required key `checkpoint`"))?;
    let (model_cfg, layer) = load_checkpoint(&ckpt)?;
    let (task, profile, _) = load_task(cfg)?;
    if task.channels() != model_cfg.channels {
        return Err(config_err(format!(
            "dataset has {} channels, checkpoint expects {}",
            task.channels(),
            model_cfg.channels
        )));
    }
    let val = evaluate(&task.windows(Split::Val, &model_cfg)?, &model_cfg, &layer)?;
    let test = evaluate(&task.windows(Split::Test, &model_cfg)?, &model_cfg, &layer)?;
    let dir = RunDir::create(out, "eval")?;
    write_json(
        &dir.file("metrics.json"),
        &EvalReport {
            dataset: profile.name.clone(),
            checkpoint: ckpt.display().to_string(),
            model: ModelSummary::of(&model_cfg),
            metrics: SplitMetrics {
                val_mse: val.mse,
                val_mae: val.mae,
                test_mse: test.mse,
                test_mae: test.mae,
            },
        },
    )?;
    dir.finish()
}

/// `report.json` of a detection run.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DetectReport {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub adjusted: bool,
    pub window: usize,
    pub factor: usize,
    /// Complex parameter entries of the reconstruction layer.
    pub params: usize,
    pub real_params: usize,
    /// First row of the labeled range the threshold is selected and scored on.
    pub eval_start: usize,
    pub eval_rows: usize,
}

fn load_labeled(cfg: &RunConfig) -> Result<LabeledSeries> {
    let path = cfg.data_path("data")?;
    let frame = load_csv(&path, cfg.bool_or("timestamp", false)?)?;
    match (cfg.get("labels"), cfg.get("label_column")) {
        (Some(_), Some(_)) => Err(config_err("set only one of `labels` and `label_column`")),
        (Some(_), None) => {
            let labels = load_labels(&cfg.data_path("labels")?)?;
            if labels.len() != frame.len() {
                return Err(FitsError::shape(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    frame.len()
                )));
            }
            Ok(LabeledSeries {
                values: frame.values,
                labels,
            })
        }
        (None, Some(col)) => split_label_column(&frame, col),
        (None, None) => split_label_column(&frame, "label"),
    }
}

/// Reconstruction-based detection. Rows before `train_rows` are the
/// anomaly-free training range and the rest is scored and thresholded.
pub fn cmd_detect(cfg: &RunConfig, out: &Path, train_first: bool) -> Result<PathBuf> {
    let window = cfg.usize_or("window", DEFAULT_WINDOW)?;
    let factor = cfg.usize_or("factor", DEFAULT_FACTOR)?;
    if factor == 0 || window == 0 || window % factor != 0 {
        return Err(config_err(format!("window {window} is not divisible by factor {factor}")));
    }
    if (window / factor) % 2 != 0 || window % 2 != 0 {
        return Err(config_err(format!(
            "window {window} and window / factor {} must both be even",
            window / factor
        )));
    }
    let val_fraction = cfg.f64_or("val_fraction", DEFAULT_VAL_FRACTION)?;
    let spec = cfg.train_spec(reconstruction_spec())?;
    let write_scores = cfg.bool_or("write_scores", false)?;
    if train_first == cfg.get("checkpoint").is_some() {
        return Err(config_err("pass either `checkpoint` or --train-first"));
    }
    let series = load_labeled(cfg)?;
    let total = series.values.nrows();
    let train_rows = cfg.require_usize("train_rows")?;
    if train_rows >= total {
        return Err(config_err(format!("train_rows {train_rows} leaves no rows of {total} to score")));
    }

    let dir = RunDir::create(out, "detect")?;
    let (model_cfg, layer) = if train_first {
        let seed = spec.seeds_for_reporting[0];
        let spec = TrainSpec { seed, ..spec };
        let (model_cfg, outcome) =
            train_reconstruction(series.values.slice(s![..train_rows, ..]), window, factor, val_fraction, &spec)?;
        save_checkpoint(&dir.file("model.ckpt"), &model_cfg, &outcome.layer)?;
        write_history_csv(&dir.file("history.csv"), &outcome.history)?;
        (model_cfg, outcome.layer)
    } else {
        let (model_cfg, layer) = load_checkpoint(&cfg.data_path("checkpoint")?)?;
        if model_cfg.output_len != window || model_cfg.input_len * factor != window {
            return Err(config_err(format!(
                "checkpoint maps {} to {} steps, not window {window} / factor {factor}",
                model_cfg.input_len, model_cfg.output_len
            )));
        }
        (model_cfg, layer)
    };

    let scores: AnomalyScores = score_series(&model_cfg, &layer, series.values.view())?;
    let eval = train_rows..total;
    let report: DetectionReport = select_threshold(&scores.scores[eval.clone()], &series.labels[eval.clone()])?;
    let (params, real_params) = model_cfg.param_count();
    let detect = DetectReport {
        threshold: report.threshold,
        precision: report.precision,
        recall: report.recall,
        f1: report.f1,
        accuracy: report.accuracy,
        adjusted: report.adjusted,
        window,
        factor,
        params,
        real_params,
        eval_start: train_rows,
        eval_rows: eval.len(),
    };
    write_json(&dir.file("report.json"), &detect)?;
    if write_scores {
        write_scores_csv(&dir.file("scores.csv"), &scores, &series.labels)?;
    }
    dir.finish()
}

fn write_scores_csv(path: &Path, scores: &AnomalyScores, labels: &[bool]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| FitsError::csv(path, e))?;
    w.write_record(["t", "score", "covered", "label"]).map_err(|e| FitsError::csv(path, e))?;
    for (t, (&s, (&c, &l))) in scores.scores.iter().zip(scores.coverage.iter().zip(labels)).enumerate() {
        w.write_record([t.to_string(), format!("{s:e}"), u8::from(c).to_string(), u8::from(l).to_string()])
            .map_err(|e| FitsError::csv(path, e))?;
    }
    w.flush().map_err(|e| FitsError::io(path, e))
}

/// Writes `synth_values.csv` and `synth_labels.csv`.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let d = SynthConfig::default();
    let synth = SynthConfig {
        len: cfg.usize_or("len", d.len)?,
        channels: cfg.usize_or("channels", d.channels)?,
        rate: cfg.f64_or("rate", d.rate)?,
        seed: cfg.usize_or("seed", d.seed as usize)? as u64,
    };
    let data = synth_anomaly(&synth).map_err(|e| config_err(e.to_string()))?;
    let dir = RunDir::create(out, "synth")?;
    let names: Vec<String> = (0..synth.channels).map(|c| format!("ch{c}")).collect();
    write_values_csv(&dir.file("synth_values.csv"), &names, data.series.values.view())?;
    write_labels(&dir.file("synth_labels.csv"), &data.series.labels)?;
    write_json(
        &dir.file("synth.json"),
        &serde_json::json!({
            "len": synth.len,
            "channels": synth.channels,
            "rate": synth.rate,
            "seed": synth.seed,
            "train_rows": data.train_end,
        }),
    )?;
    dir.finish()
}
