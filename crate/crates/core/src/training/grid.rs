use std::path::Path;

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::TrainSpec;
use super::train::{evaluate, train, EpochRecord, EvalMetrics};
use crate::data::{chrono_split, make_windows, DatasetProfile, SplitRanges, Standardizer, WindowSet};
use crate::error::{FitsError, Result};
use crate::model::{init_params, ComplexLinear, FitsConfig, Supervision};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// A standardized series with its chronological split.
#[derive(Debug, Clone)]
pub struct ForecastTask {
    pub values: Array2<f64>,
    pub splits: SplitRanges,
    pub period: usize,
    pub standardizer: Standardizer,
}

impl ForecastTask {
    /// Splits `values` by the profile's rule and standardizes with train
    /// statistics.
    pub fn prepare(values: ArrayView2<'_, f64>, profile: &DatasetProfile) -> Result<Self> {
        let splits = chrono_split(values.nrows(), profile.split)?;
        Self::with_splits(values, splits, profile.period)
    }

    pub fn with_splits(values: ArrayView2<'_, f64>, splits: SplitRanges, period: usize) -> Result<Self> {
        let standardizer = Standardizer::fit(values, splits.train.clone())?;
        Ok(Self {
            values: standardizer.transform(values),
            splits,
            period,
            standardizer,
        })
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn config(
        &self,
        look_back: usize,
        horizon: usize,
        harmonic: Option<usize>,
        supervision: Supervision,
    ) -> Result<FitsConfig> {
        FitsConfig::forecasting(look_back, horizon, self.period, harmonic, supervision, self.channels())
    }

    /// Stride-1 windows whose horizons lie inside `split`.
    pub fn windows(&self, split: Split, cfg: &FitsConfig) -> Result<WindowSet> {
        let range = match split {
            Split::Train => &self.splits.train,
            Split::Val => &self.splits.val,
            Split::Test => &self.splits.test,
        };
        let rows = self.splits.window_rows(range, cfg.input_len)?;
        make_windows(
            self.values.slice(s![rows, ..]),
            cfg.input_len,
            cfg.horizon(),
            cfg.supervision,
        )
    }
}

/// Result of one seed: the restored best-epoch layer and its metrics.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub layer: ComplexLinear,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub val: EvalMetrics,
    pub test: EvalMetrics,
}

/// Trains one model per seed in `spec.seeds_for_reporting`. The seed drives
/// both initialization and batch shuffling.
pub fn run_forecast(task: &ForecastTask, cfg: &FitsConfig, spec: &TrainSpec) -> Result<Vec<SeedRun>> {
    spec.validate()?;
    let train_w = task.windows(Split::Train, cfg)?;
    let val_w = task.windows(Split::Val, cfg)?;
    let test_w = task.windows(Split::Test, cfg)?;
    let mut runs = Vec::with_capacity(spec.seeds_for_reporting.len());
    for &seed in &spec.seeds_for_reporting {
        let seed_spec = TrainSpec {
            seed,
            ..spec.clone()
        };
        let outcome = train(init_params(cfg, seed), &train_w, &val_w, cfg, &seed_spec)?;
        let val = evaluate(&val_w, cfg, &outcome.layer)?;
        let test = evaluate(&test_w, cfg, &outcome.layer)?;
        log::info!(
            "L={} H={} n={:?} {} seed {seed}: val {:.6} test {:.6} (best epoch {})",
            cfg.input_len,
            cfg.horizon(),
            cfg.harmonic,
            cfg.supervision,
            val.mse,
            test.mse,
            outcome.best_epoch
        );
        runs.push(SeedRun {
            seed,
            layer: outcome.layer,
            history: outcome.history,
            best_epoch: outcome.best_epoch,
            val,
            test,
        });
    }
    Ok(runs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridPoint {
    pub look_back: usize,
    pub harmonic: Option<usize>,
    pub supervision: Supervision,
}

/// Seed-averaged outcome of one grid combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub look_back: usize,
    pub harmonic: Option<usize>,
    pub supervision: Supervision,
    pub val_mse: f64,
    pub test_mse: f64,
    pub complex_entries: usize,
    /// Longest run over seeds.
    pub epochs_ran: usize,
}

impl GridRow {
    pub fn point(&self) -> GridPoint {
        GridPoint {
            look_back: self.look_back,
            harmonic: self.harmonic,
            supervision: self.supervision,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    pub selected: usize,
}

impl GridResult {
    pub fn best(&self) -> &GridRow {
        &self.rows[self.selected]
    }
}

/// Index of the lowest validation MSE; ties go to fewer complex entries,
/// then the shorter look-back.
pub fn select_row(rows: &[GridRow]) -> Option<usize> {
    (0..rows.len()).min_by(|&a, &b| {
        let (ra, rb) = (&rows[a], &rows[b]);
        ra.val_mse
            .total_cmp(&rb.val_mse)
            .then(ra.complex_entries.cmp(&rb.complex_entries))
            .then(ra.look_back.cmp(&rb.look_back))
    })
}

fn grid_row(task: &ForecastTask, point: GridPoint, horizon: usize, spec: &TrainSpec) -> Result<GridRow> {
    let cfg = task.config(point.look_back, horizon, point.harmonic, point.supervision)?;
    let runs = run_forecast(task, &cfg, spec)?;
    let n = runs.len() as f64;
    Ok(GridRow {
        look_back: point.look_back,
        harmonic: cfg.harmonic,
        supervision: point.supervision,
        val_mse: runs.iter().map(|r| r.val.mse).sum::<f64>() / n,
        test_mse: runs.iter().map(|r| r.test.mse).sum::<f64>() / n,
        complex_entries: cfg.param_count().0,
        epochs_ran: runs.iter().map(|r| r.history.len()).max().unwrap_or(0),
    })
}

/// Values searched along each grid axis for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxes {
    pub horizon: usize,
    pub look_backs: Vec<usize>,
    pub harmonics: Vec<Option<usize>>,
    pub supervisions: Vec<Supervision>,
}

impl GridAxes {
    fn points(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &look_back in &self.look_backs {
            for &harmonic in &self.harmonics {
                for &supervision in &self.supervisions {
                    let p = GridPoint {
                        look_back,
                        harmonic: harmonic.filter(|&n| n > 0),
                        supervision,
                    };
                    if !points.contains(&p) {
                        points.push(p);
                    }
                }
            }
        }
        points
    }
}

/// Trains every combination on the grid. Rows already present in `cached`
/// are reused instead of being retrained; `on_row` sees each newly
/// finished row.
pub fn grid_search(
    task: &ForecastTask,
    axes: &GridAxes,
    spec: &TrainSpec,
    cached: &[GridRow],
    on_row: &(dyn Fn(&GridRow) -> Result<()> + Sync),
) -> Result<GridResult> {
    let GridAxes {
        horizon,
        look_backs,
        harmonics,
        supervisions,
    } = axes;
    let horizon = *horizon;
    if look_backs.is_empty() || harmonics.is_empty() || supervisions.is_empty() {
        return Err(FitsError::Config("grid needs at least one value per axis".into()));
    }
    let longest = *look_backs.iter().max().expect("nonempty");
    let first_eval = task.splits.val.start;
    if longest > first_eval {
        return Err(FitsError::InvalidArgument(format!(
            "look-back {longest} exceeds the {first_eval} rows before validation"
        )));
    }
    let rows = axes
        .points()
        .par_iter()
        .map(|&p| {
            if let Some(row) = cached.iter().find(|r| r.point() == p) {
                log::info!("reusing cached row L={} n={:?} {}", p.look_back, p.harmonic, p.supervision);
                return Ok(row.clone());
            }
            let row = grid_row(task, p, horizon, spec)?;
            on_row(&row)?;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let selected = select_row(&rows).expect("nonempty grid");
    Ok(GridResult { rows, selected })
}

const GRID_HEADER: [&str; 7] = [
    "look_back",
    "harmonic",
    "supervision",
    "val_mse",
    "test_mse",
    "complex_entries",
    "epochs_ran",
];

pub fn write_grid_csv(path: &Path, rows: &[GridRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| FitsError::csv(path, e))?;
    let err = |e| FitsError::csv(path, e);
    w.write_record(GRID_HEADER).map_err(err)?;
    for r in rows {
        w.write_record([
            r.look_back.to_string(),
            r.harmonic.map_or_else(|| "none".to_owned(), |n| n.to_string()),
            r.supervision.as_str().to_owned(),
            format!("{:e}", r.val_mse),
            format!("{:e}", r.test_mse),
            r.complex_entries.to_string(),
            r.epochs_ran.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| FitsError::io(path, e))
}

pub fn read_grid_csv(path: &Path) -> Result<Vec<GridRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| FitsError::csv(path, e))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| FitsError::csv(path, e))?;
        if rec.len() != GRID_HEADER.len() {
            return Err(FitsError::Parse {
                row: line,
                column: rec.len(),
                message: format!("expected {} fields", GRID_HEADER.len()),
            });
        }
        let bad = |col: usize| FitsError::Parse {
            row: line,
            column: col + 1,
            message: format!("invalid {}", GRID_HEADER[col]),
        };
        let harmonic = match &rec[1] {
            "none" | "" => None,
            v => Some(v.parse().map_err(|_| bad(1))?),
        };
        rows.push(GridRow {
            look_back: rec[0].parse().map_err(|_| bad(0))?,
            harmonic,
            supervision: rec[2].parse().map_err(|_| bad(2))?,
            val_mse: rec[3].parse().map_err(|_| bad(3))?,
            test_mse: rec[4].parse().map_err(|_| bad(4))?,
            complex_entries: rec[5].parse().map_err(|_| bad(5))?,
            epochs_ran: rec[6].parse().map_err(|_| bad(6))?,
        });
    }
    Ok(rows)
}

/// `epoch,train_mse,val_mse`, one line per epoch.
pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| FitsError::csv(path, e))?;
    for rec in history {
        w.serialize(rec).map_err(|e| FitsError::csv(path, e))?;
    }
    w.flush().map_err(|e| FitsError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(l: usize, val: f64, entries: usize) -> GridRow {
        GridRow {
            look_back: l,
            harmonic: Some(2),
            supervision: Supervision::BackcastAndForecast,
            val_mse: val,
            test_mse: 0.0,
            complex_entries: entries,
            epochs_ran: 1,
        }
    }

    #[test]
    fn selection_tie_breaks() {
        let rows = vec![row(720, 0.3, 100), row(360, 0.2, 80), row(180, 0.2, 50), row(90, 0.2, 50)];
        assert_eq!(select_row(&rows), Some(3));
        assert_eq!(select_row(&rows[..2]), Some(1));
        assert_eq!(select_row(&[]), None);
    }

    #[test]
    fn grid_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        let mut rows = vec![row(90, 0.123456789, 703), row(180, 1e-7, 9)];
        rows[1].harmonic = None;
        rows[1].supervision = Supervision::ForecastOnly;
        write_grid_csv(&path, &rows).unwrap();
        assert_eq!(read_grid_csv(&path).unwrap(), rows);
    }
}
