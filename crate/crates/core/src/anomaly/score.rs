use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FitsError, Result};
use crate::model::{fits_forward, init_params, ComplexLinear, FitsConfig};
use crate::training::{train, TrainOutcome, TrainSpec, WindowSource};

pub const DEFAULT_WINDOW: usize = 200;
pub const DEFAULT_FACTOR: usize = 4;
/// Reconstruction weights settle near the upsampling factor, far from
/// their initial scale, so reconstruction trains with a larger step.
pub const RECONSTRUCTION_LEARNING_RATE: f64 = 1e-2;
pub const DEFAULT_VAL_FRACTION: f64 = 0.2;

pub fn reconstruction_spec() -> TrainSpec {
    TrainSpec {
        learning_rate: RECONSTRUCTION_LEARNING_RATE,
        ..TrainSpec::default()
    }
}

/// Every `factor`-th row of `window`, starting at row 0.
pub fn downsample(window: ArrayView2<'_, f64>, factor: usize) -> Result<Array2<f64>> {
    if factor == 0 || !window.nrows().is_multiple_of(factor) {
        return Err(FitsError::InvalidArgument(format!(
            "downsample factor {factor} does not divide window length {}",
            window.nrows()
        )));
    }
    Ok(window.slice(s![..;factor, ..]).to_owned())
}

/// Sliding windows for reconstruction training: input is the subsampled
/// window, target and evaluation rows are the full window.
#[derive(Debug, Clone)]
pub struct ReconstructionWindows {
    data: Array2<f64>,
    window: usize,
    factor: usize,
    stride: usize,
}

impl ReconstructionWindows {
    pub fn new(rows: ArrayView2<'_, f64>, window: usize, factor: usize, stride: usize) -> Result<Self> {
        if factor == 0 || !window.is_multiple_of(factor) {
            return Err(FitsError::InvalidArgument(format!(
                "window {window} is not divisible by downsample factor {factor}"
            )));
        }
        if stride == 0 {
            return Err(FitsError::InvalidArgument("window stride must be positive".into()));
        }
        if rows.nrows() < window {
            return Err(FitsError::InvalidArgument(format!(
                "{} rows cannot hold a window of {window}",
                rows.nrows()
            )));
        }
        Ok(Self {
            data: rows.to_owned(),
            window,
            factor,
            stride,
        })
    }
}

impl WindowSource for ReconstructionWindows {
    fn len(&self) -> usize {
        (self.data.nrows() - self.window) / self.stride + 1
    }

    fn input(&self, i: usize) -> ArrayView2<'_, f64> {
        let start = i * self.stride;
        self.data.slice(s![start..start + self.window;self.factor, ..])
    }

    fn target(&self, i: usize) -> ArrayView2<'_, f64> {
        let start = i * self.stride;
        self.data.slice(s![start..start + self.window, ..])
    }

    fn eval_target(&self, i: usize) -> (usize, ArrayView2<'_, f64>) {
        (0, self.target(i))
    }
}

/// Fits a reconstruction model on normal rows. The last `val_fraction` of
/// the rows (at least one window) is held out for early stopping.
pub fn train_reconstruction(
    rows: ArrayView2<'_, f64>,
    window: usize,
    factor: usize,
    val_fraction: f64,
    spec: &TrainSpec,
) -> Result<(FitsConfig, TrainOutcome)> {
    let cfg = FitsConfig::reconstruction(window, factor, rows.ncols())?;
    if !(0.0..1.0).contains(&val_fraction) || val_fraction == 0.0 {
        return Err(FitsError::Config(format!("validation fraction {val_fraction} outside (0, 1)")));
    }
    let t = rows.nrows();
    let val_rows = ((t as f64 * val_fraction).round() as usize).max(window);
    if t < val_rows + window {
        return Err(FitsError::InvalidArgument(format!(
            "{t} training rows are too few for window {window} plus a validation hold-out"
        )));
    }
    let split = t - val_rows;
    let train_w = ReconstructionWindows::new(rows.slice(s![..split, ..]), window, factor, 1)?;
    let val_w = ReconstructionWindows::new(rows.slice(s![split.., ..]), window, factor, 1)?;
    let outcome = train(init_params(&cfg, spec.seed), &train_w, &val_w, &cfg, spec)?;
    Ok((cfg, outcome))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyScores {
    /// Squared reconstruction error averaged over channels and over every
    /// window covering the step.
    pub scores: Vec<f64>,
    pub coverage: Vec<bool>,
}

fn window_starts(len: usize, window: usize) -> Vec<usize> {
    let mut starts: Vec<usize> = (0..=len - window).step_by(window).collect();
    if !len.is_multiple_of(window) {
        starts.push(len - window);
    }
    starts
}

/// Scores every timestep with non-overlapping windows plus one window
/// aligned to the end of the series.
pub fn score_series(
    cfg: &FitsConfig,
    layer: &ComplexLinear,
    series: ArrayView2<'_, f64>,
) -> Result<AnomalyScores> {
    let window = cfg.output_len;
    if cfg.input_len == 0 || !window.is_multiple_of(cfg.input_len) {
        return Err(FitsError::Config(format!(
            "model maps {} steps to {window}; expected a divisor of the window",
            cfg.input_len
        )));
    }
    let factor = window / cfg.input_len;
    let (len, channels) = series.dim();
    if len < window {
        return Err(FitsError::InvalidArgument(format!(
            "series of {len} steps is shorter than the window {window}"
        )));
    }
    if channels != cfg.channels {
        return Err(FitsError::shape(format!(
            "series has {channels} channels, model expects {}",
            cfg.channels
        )));
    }
    let starts = window_starts(len, window);
    let errors = starts
        .par_iter()
        .map(|&start| {
            let full = series.slice(s![start..start + window, ..]);
            let input = downsample(full, factor)?;
            let recon = fits_forward(input.view(), cfg, layer)?;
            Ok((start, (&recon - &full).mapv(|e| e * e).mean_axis(ndarray::Axis(1)).expect("channels")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sum = vec![0.0; len];
    let mut count = vec![0u32; len];
    for (start, err) in errors {
        for (k, e) in err.iter().enumerate() {
            sum[start + k] += e;
            count[start + k] += 1;
        }
    }
    let scores: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    if let Some(t) = scores.iter().position(|v| v.is_infinite()) {
        return Err(FitsError::Numeric(format!("reconstruction error at step {t} is infinite")));
    }
    Ok(AnomalyScores {
        scores,
        coverage: count.iter().map(|&c| c > 0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn downsample_examples() {
        let x = Array2::from_shape_fn((8, 1), |(t, _)| t as f64);
        assert_eq!(downsample(x.view(), 2).unwrap().column(0).to_vec(), vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(downsample(x.view(), 1).unwrap(), x);
        let twice = downsample(downsample(x.view(), 2).unwrap().view(), 2).unwrap();
        assert_eq!(twice, downsample(x.view(), 4).unwrap());
        assert!(downsample(x.view(), 3).is_err());
    }

    #[test]
    fn window_layout() {
        assert_eq!(window_starts(400, 200), vec![0, 200]);
        assert_eq!(window_starts(500, 200), vec![0, 200, 300]);
        assert_eq!(window_starts(200, 200), vec![0]);
    }

    #[test]
    fn reconstruction_windows_are_strided_views() {
        let x = Array2::from_shape_fn((30, 2), |(t, c)| (t * 2 + c) as f64);
        let w = ReconstructionWindows::new(x.view(), 8, 4, 3).unwrap();
        assert_eq!(w.len(), 8);
        assert_eq!(w.input(1), downsample(x.slice(s![3..11, ..]), 4).unwrap());
        assert_eq!(w.target(1), x.slice(s![3..11, ..]));
        assert_eq!(w.eval_target(2).0, 0);
    }
}
