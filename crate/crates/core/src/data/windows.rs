use ndarray::{s, Array2, ArrayView2};

use crate::error::{FitsError, Result};
use crate::model::Supervision;

/// Stride-1 windows over a block of rows, kept as views into one array.
#[derive(Debug, Clone)]
pub struct WindowSet {
    data: Array2<f64>,
    input_len: usize,
    horizon: usize,
    supervision: Supervision,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.data.nrows() + 1 - self.input_len - self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn supervision(&self) -> Supervision {
        self.supervision
    }

    pub fn input(&self, i: usize) -> ArrayView2<'_, f64> {
        self.data.slice(s![i..i + self.input_len, ..])
    }

    /// Look-back plus horizon, or the horizon alone, depending on supervision.
    pub fn target(&self, i: usize) -> ArrayView2<'_, f64> {
        match self.supervision {
            Supervision::BackcastAndForecast => self.segment(i),
            Supervision::ForecastOnly => self.horizon_rows(i),
        }
    }

    pub fn horizon_rows(&self, i: usize) -> ArrayView2<'_, f64> {
        let start = i + self.input_len;
        self.data.slice(s![start..start + self.horizon, ..])
    }

    /// The contiguous `input_len + horizon` rows of window `i`.
    pub fn segment(&self, i: usize) -> ArrayView2<'_, f64> {
        self.data.slice(s![i..i + self.input_len + self.horizon, ..])
    }
}

/// Windows of `input_len` rows followed by `horizon` rows, stride 1.
pub fn make_windows(
    rows: ArrayView2<'_, f64>,
    input_len: usize,
    horizon: usize,
    supervision: Supervision,
) -> Result<WindowSet> {
    if input_len == 0 {
        return Err(FitsError::InvalidArgument("input length must be positive".into()));
    }
    if rows.nrows() < input_len + horizon {
        return Err(FitsError::InvalidArgument(format!(
            "{} rows cannot hold a window of {input_len} + {horizon}",
            rows.nrows()
        )));
    }
    Ok(WindowSet {
        data: rows.to_owned(),
        input_len,
        horizon,
        supervision,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::concatenate;
    use ndarray::Axis;

    fn ramp(n: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, c), |(t, ch)| (t * 10 + ch) as f64)
    }

    #[test]
    fn count_and_first_window() {
        let data = ramp(10, 2);
        let w = make_windows(data.view(), 4, 2, Supervision::ForecastOnly).unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(w.input(0), data.slice(s![0..4, ..]));
        assert_eq!(w.target(0), data.slice(s![4..6, ..]));
        let bf = make_windows(data.view(), 4, 2, Supervision::BackcastAndForecast).unwrap();
        assert_eq!(bf.target(4), data.slice(s![4..10, ..]));
        assert!(make_windows(data.view(), 8, 3, Supervision::ForecastOnly).is_err());
    }

    #[test]
    fn input_and_horizon_concatenate_to_slice() {
        let data = ramp(40, 3);
        let w = make_windows(data.view(), 7, 5, Supervision::ForecastOnly).unwrap();
        for i in 0..w.len() {
            let joined = concatenate(Axis(0), &[w.input(i), w.horizon_rows(i)]).unwrap();
            assert_eq!(joined, data.slice(s![i..i + 12, ..]));
        }
    }

    #[test]
    fn stride_one_inputs_cover_all_rows() {
        let data = ramp(30, 1);
        let w = make_windows(data.view(), 6, 3, Supervision::ForecastOnly).unwrap();
        let mut rebuilt: Vec<f64> = (0..w.len()).map(|i| w.input(i)[[0, 0]]).collect();
        rebuilt.extend(w.input(w.len() - 1).column(0).iter().skip(1));
        rebuilt.extend(w.horizon_rows(w.len() - 1).column(0).iter());
        assert_eq!(rebuilt, data.column(0).to_vec());
    }
}
