use std::ops::Range;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{FitsError, Result};

const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitRule {
    /// 12/4/4 months of hourly rows: 8640 / 2880 / 2880.
    EttH,
    /// 12/4/4 months of 15-minute rows: 34560 / 11520 / 11520.
    EttM,
    /// `floor(0.7 T)` train, `floor(0.2 T)` test, the rest validation.
    Ratio70_10_20,
}

impl std::str::FromStr for SplitRule {
    type Err = FitsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "etth" => Ok(SplitRule::EttH),
            "ettm" => Ok(SplitRule::EttM),
            "ratio" | "ratio70_10_20" | "70/10/20" => Ok(SplitRule::Ratio70_10_20),
            other => Err(FitsError::Config(format!("unknown split rule `{other}`"))),
        }
    }
}

/// Per-dataset constants: dominant period in timesteps and split rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub name: String,
    pub period: usize,
    pub split: SplitRule,
}

impl DatasetProfile {
    pub fn new(name: impl Into<String>, period: usize, split: SplitRule) -> Result<Self> {
        if period == 0 {
            return Err(FitsError::InvalidArgument("base period must be positive".into()));
        }
        Ok(Self {
            name: name.into(),
            period,
            split,
        })
    }

    /// Built-in benchmark profiles: hourly data has a daily period of 24
    /// steps, 15-minute data 96, 10-minute data 144.
    pub fn builtin(name: &str) -> Option<Self> {
        let (period, split) = match name.to_ascii_lowercase().as_str() {
            "etth1" | "etth2" => (24, SplitRule::EttH),
            "ettm1" | "ettm2" => (96, SplitRule::EttM),
            "weather" => (144, SplitRule::Ratio70_10_20),
            "electricity" | "ecl" => (24, SplitRule::Ratio70_10_20),
            "traffic" => (24, SplitRule::Ratio70_10_20),
            _ => return None,
        };
        Some(Self {
            name: name.to_owned(),
            period,
            split,
        })
    }
}

/// Contiguous, disjoint, ordered row ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitRanges {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitRanges {
    /// Rows to cut windows from for `range`: extended backward by `input_len`
    /// rows so the first window's horizon starts at `range.start`. Train
    /// windows start at row 0.
    pub fn window_rows(&self, range: &Range<usize>, input_len: usize) -> Result<Range<usize>> {
        if range.start == self.train.start {
            return Ok(range.clone());
        }
        let start = range.start.checked_sub(input_len).ok_or_else(|| {
            FitsError::InvalidArgument(format!(
                "look-back {input_len} reaches before row 0 from split start {}",
                range.start
            ))
        })?;
        Ok(start..range.end)
    }
}

pub fn chrono_split(len: usize, rule: SplitRule) -> Result<SplitRanges> {
    let (train, val, test) = match rule {
        SplitRule::EttH => (8640, 2880, 2880),
        SplitRule::EttM => (34560, 11520, 11520),
        SplitRule::Ratio70_10_20 => {
            let train = len * 7 / 10;
            let test = len * 2 / 10;
            (train, len - train - test, test)
        }
    };
    if train + val + test > len || train == 0 || val == 0 || test == 0 {
        return Err(FitsError::InvalidArgument(format!(
            "{len} rows are too few for a {train}/{val}/{test} split"
        )));
    }
    Ok(SplitRanges {
        train: 0..train,
        val: train..train + val,
        test: train + val..train + val + test,
    })
}

/// Per-channel affine map fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(values: ArrayView2<'_, f64>, train: Range<usize>) -> Result<Self> {
        if train.is_empty() || train.end > values.nrows() {
            return Err(FitsError::EmptySplit("standardization train range"));
        }
        let rows = values.slice(ndarray::s![train.clone(), ..]);
        let n = train.len() as f64;
        let mut mean = Vec::with_capacity(values.ncols());
        let mut std = Vec::with_capacity(values.ncols());
        for col in rows.axis_iter(Axis(1)) {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            std.push(if var.sqrt() > 0.0 { var.sqrt() } else { STD_FLOOR });
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, values: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = values.to_owned();
        for (c, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[c], self.std[c]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        out
    }

    pub fn inverse(&self, values: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = values.to_owned();
        for (c, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[c], self.std[c]);
            col.mapv_inplace(|v| v * s + m);
        }
        out
    }
}

/// Standardizes every row with statistics from `train` rows only.
pub fn standardize(
    values: ArrayView2<'_, f64>,
    train: Range<usize>,
) -> Result<(Array2<f64>, Standardizer)> {
    let s = Standardizer::fit(values, train)?;
    Ok((s.transform(values), s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn ratio_split() {
        let s = chrono_split(100, SplitRule::Ratio70_10_20).unwrap();
        assert_eq!((s.train, s.val, s.test), (0..70, 70..80, 80..100));
    }

    #[test]
    fn ett_splits() {
        let s = chrono_split(17420, SplitRule::EttH).unwrap();
        assert_eq!(s.train, 0..12 * 30 * 24);
        assert_eq!(s.val, 8640..11520);
        assert_eq!(s.test, 11520..14400);
        let m = chrono_split(69680, SplitRule::EttM).unwrap();
        assert_eq!(m.train.len(), 12 * 30 * 96);
        assert!(chrono_split(14399, SplitRule::EttH).is_err());
    }

    #[test]
    fn window_border_extension() {
        let s = chrono_split(100, SplitRule::Ratio70_10_20).unwrap();
        assert_eq!(s.window_rows(&s.test, 8).unwrap(), 72..100);
        assert_eq!(s.window_rows(&s.train, 8).unwrap(), 0..70);
        // 80 - 96 < 0
        assert!(s.window_rows(&s.test, 96).is_err());
    }

    #[test]
    fn standardize_uses_train_rows_only() {
        let x = array![[1.0, 10.0], [3.0, 10.0], [100.0, -50.0], [7.0, 3.0]];
        let (z, st) = standardize(x.view(), 0..2).unwrap();
        assert_eq!(st.mean, vec![2.0, 10.0]);
        assert_eq!(st.std, vec![1.0, STD_FLOOR]);
        assert_eq!(z[[0, 0]], -1.0);
        let train_mean: f64 = z.slice(ndarray::s![0..2, 0]).sum() / 2.0;
        assert!(train_mean.abs() < 1e-9);
        let (leaky, _) = standardize(x.view(), 0..3).unwrap();
        assert_ne!(leaky, z);
        let back = st.inverse(z.view());
        assert!(back.iter().zip(x.iter()).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn builtin_profiles() {
        assert_eq!(DatasetProfile::builtin("ETTh2").unwrap().period, 24);
        assert_eq!(DatasetProfile::builtin("ettm2").unwrap().split, SplitRule::EttM);
        assert_eq!(DatasetProfile::builtin("weather").unwrap().period, 144);
        assert!(DatasetProfile::builtin("m4").is_none());
    }
}
