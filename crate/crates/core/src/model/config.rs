use serde::{Deserialize, Serialize};

use crate::error::{FitsError, Result};
use crate::spectral::cutoff_bins;

/// Which part of the output segment the loss sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Supervision {
    /// Only the last `output_len - input_len` steps.
    ForecastOnly,
    /// The whole output segment: look-back (or full window) plus horizon.
    BackcastAndForecast,
}

impl Supervision {
    pub fn as_str(self) -> &'static str {
        match self {
            Supervision::ForecastOnly => "F",
            Supervision::BackcastAndForecast => "B+F",
        }
    }
}

impl std::fmt::Display for Supervision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Supervision {
    type Err = FitsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" | "forecast" | "forecast_only" | "forecastonly" => Ok(Supervision::ForecastOnly),
            "b+f" | "bf" | "backcast_forecast" | "backcastandforecast" | "backcast_and_forecast" => {
                Ok(Supervision::BackcastAndForecast)
            }
            other => Err(FitsError::Config(format!("unknown supervision mode `{other}`"))),
        }
    }
}

/// Shape of one model: window lengths, low-pass cutoff, and layer size.
///
/// `harmonic = None` disables the low-pass filter (every non-DC bin of the
/// input is kept).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitsConfig {
    pub input_len: usize,
    pub output_len: usize,
    pub period: usize,
    pub harmonic: Option<usize>,
    pub k_cut: usize,
    pub n_in: usize,
    pub n_out: usize,
    pub supervision: Supervision,
    pub channels: usize,
}

impl FitsConfig {
    pub fn new(
        input_len: usize,
        output_len: usize,
        period: usize,
        harmonic: Option<usize>,
        supervision: Supervision,
        channels: usize,
    ) -> Result<Self> {
        for (name, len) in [("input length", input_len), ("output length", output_len)] {
            if len < 2 || len % 2 != 0 {
                return Err(FitsError::InvalidLength {
                    len,
                    reason: if name == "input length" {
                        "input length must be even and at least 2"
                    } else {
                        "output length must be even and at least 2"
                    },
                });
            }
        }
        if output_len < input_len {
            return Err(FitsError::InvalidArgument(format!(
                "output length {output_len} is shorter than input length {input_len}"
            )));
        }
        if channels == 0 {
            return Err(FitsError::InvalidArgument("channel count must be positive".into()));
        }
        if supervision == Supervision::ForecastOnly && output_len == input_len {
            return Err(FitsError::InvalidArgument(
                "forecast-only supervision needs a non-empty horizon".into(),
            ));
        }
        let k_cut = match harmonic {
            Some(0) | None => input_len / 2,
            Some(n) => cutoff_bins(input_len, period, n)?,
        };
        let n_out = (k_cut * output_len / input_len).min(output_len / 2);
        Ok(Self {
            input_len,
            output_len,
            period,
            harmonic: harmonic.filter(|&n| n > 0),
            k_cut,
            n_in: k_cut,
            n_out,
            supervision,
            channels,
        })
    }

    /// Forecasting a horizon `horizon` from a look-back of `look_back`.
    pub fn forecasting(
        look_back: usize,
        horizon: usize,
        period: usize,
        harmonic: Option<usize>,
        supervision: Supervision,
        channels: usize,
    ) -> Result<Self> {
        Self::new(look_back, look_back + horizon, period, harmonic, supervision, channels)
    }

    /// Reconstructing a `window`-step segment from every `factor`-th sample,
    /// with no low-pass filter.
    pub fn reconstruction(window: usize, factor: usize, channels: usize) -> Result<Self> {
        if factor == 0 || !window.is_multiple_of(factor) {
            return Err(FitsError::InvalidArgument(format!(
                "window {window} is not divisible by downsample factor {factor}"
            )));
        }
        let input_len = window / factor;
        Self::new(
            input_len,
            window,
            input_len,
            None,
            Supervision::BackcastAndForecast,
            channels,
        )
    }

    pub fn horizon(&self) -> usize {
        self.output_len - self.input_len
    }

    /// Interpolation rate as `(output_len, input_len)`.
    pub fn eta(&self) -> (usize, usize) {
        (self.output_len, self.input_len)
    }

    /// First supervised output step and number of supervised steps.
    pub fn supervised_span(&self) -> (usize, usize) {
        match self.supervision {
            Supervision::BackcastAndForecast => (0, self.output_len),
            Supervision::ForecastOnly => (self.input_len, self.horizon()),
        }
    }

    /// `(complex entries, real scalars)` of the layer.
    pub fn param_count(&self) -> (usize, usize) {
        param_count(self)
    }
}

pub fn param_count(cfg: &FitsConfig) -> (usize, usize) {
    let complex = cfg.n_in * cfg.n_out + cfg.n_out;
    (complex, 2 * complex)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forecasting_shapes() {
        let cfg = FitsConfig::forecasting(90, 96, 96, Some(4), Supervision::BackcastAndForecast, 7)
            .unwrap();
        assert_eq!(cfg.k_cut, 14);
        assert_eq!(cfg.n_out, 28);
        assert_eq!(cfg.output_len, 186);
        assert_eq!(cfg.eta(), (186, 90));
        assert_eq!(cfg.param_count(), (420, 840));
    }

    #[test]
    fn n_out_uses_floor() {
        let cfg = FitsConfig::forecasting(720, 96, 24, Some(2), Supervision::ForecastOnly, 1)
            .unwrap();
        assert_eq!(cfg.n_in, 72);
        assert_eq!(cfg.n_out, 81);
        assert_eq!(cfg.param_count().0, 5913);
    }

    #[test]
    fn no_filter_keeps_every_bin() {
        let cfg = FitsConfig::reconstruction(200, 4, 1).unwrap();
        assert_eq!((cfg.input_len, cfg.output_len), (50, 200));
        assert_eq!((cfg.n_in, cfg.n_out), (25, 100));
        assert_eq!(cfg.param_count().0, 2600);
        let zero = FitsConfig::new(16, 24, 4, Some(0), Supervision::ForecastOnly, 1).unwrap();
        assert_eq!(zero.harmonic, None);
        assert_eq!(zero.k_cut, 8);
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        assert!(FitsConfig::new(15, 30, 4, None, Supervision::ForecastOnly, 1).is_err());
        assert!(FitsConfig::new(16, 8, 4, None, Supervision::BackcastAndForecast, 1).is_err());
        assert!(FitsConfig::new(16, 16, 4, None, Supervision::ForecastOnly, 1).is_err());
        assert!(FitsConfig::reconstruction(200, 3, 1).is_err());
        assert!(FitsConfig::new(16, 24, 0, Some(2), Supervision::ForecastOnly, 1).is_err());
    }

    #[test]
    fn supervision_parses() {
        assert_eq!("B+F".parse::<Supervision>().unwrap(), Supervision::BackcastAndForecast);
        assert_eq!("f".parse::<Supervision>().unwrap(), Supervision::ForecastOnly);
        assert!("both".parse::<Supervision>().is_err());
    }
}
