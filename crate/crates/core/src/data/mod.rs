//! Dataset ingestion and preparation: CSV loading, chronological splits,
//! train-statistics standardization, sliding windows, and the synthetic
//! anomaly generator.

mod io;
mod split;
mod synth;
mod windows;

use ndarray::Array2;

pub use io::{load_csv, load_labels, split_label_column, write_labels, write_values_csv};
pub use split::{chrono_split, standardize, DatasetProfile, SplitRanges, SplitRule, Standardizer};
pub use synth::{synth_anomaly, AnomalyKind, SynthConfig, SynthDataset};
pub use windows::{make_windows, WindowSet};

/// `T x C` multivariate series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    pub values: Array2<f64>,
    pub channel_names: Vec<String>,
    pub timestamps: Option<Vec<String>>,
}

impl SeriesFrame {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }
}

/// Series with one anomaly flag per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub values: Array2<f64>,
    pub labels: Vec<bool>,
}
