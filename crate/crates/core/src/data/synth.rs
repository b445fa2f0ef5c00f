//! Synthetic anomaly benchmark: a single-frequency sinusoid per channel with
//! injected outliers of five kinds in the test range.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::LabeledSeries;
use crate::error::{FitsError, Result};

pub const SYNTH_PERIOD: usize = 50;
pub const SYNTH_NOISE: f64 = 0.05;
pub const SEGMENT_LEN: usize = 30;

/// Outlier kinds, injected in this rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnomalyKind {
    /// One step pushed 5 signal standard deviations away.
    GlobalPoint,
    /// One step moved 3 signal standard deviations against the local
    /// phase, clamped into the global signal range.
    ContextualPoint,
    /// Frequency doubled over a segment.
    Seasonal,
    /// Linear drift reaching +2 at the end of a segment.
    Trend,
    /// Sinusoid replaced by a square wave over a segment.
    Shapelet,
}

impl AnomalyKind {
    const ROTATION: [AnomalyKind; 5] = [
        AnomalyKind::GlobalPoint,
        AnomalyKind::ContextualPoint,
        AnomalyKind::Seasonal,
        AnomalyKind::Trend,
        AnomalyKind::Shapelet,
    ];

    fn span(self) -> usize {
        match self {
            AnomalyKind::GlobalPoint | AnomalyKind::ContextualPoint => 1,
            _ => SEGMENT_LEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub len: usize,
    pub channels: usize,
    /// Target fraction of anomalous test timesteps per channel.
    pub rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            len: 4000,
            channels: 1,
            rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub series: LabeledSeries,
    /// Rows before this index are anomaly-free training data.
    pub train_end: usize,
    /// `(channel, start, kind)` of every injected event.
    pub events: Vec<(usize, usize, AnomalyKind)>,
}

/// Generates the series; the first `5/8` of the rows (2500 of 4000) are
/// left clean for training.
pub fn synth_anomaly(cfg: &SynthConfig) -> Result<SynthDataset> {
    if cfg.len < 100 {
        return Err(FitsError::InvalidArgument("synthetic series needs at least 100 steps".into()));
    }
    if cfg.channels == 0 {
        return Err(FitsError::InvalidArgument("channel count must be positive".into()));
    }
    if !(0.0..=0.5).contains(&cfg.rate) {
        return Err(FitsError::InvalidArgument(format!("anomaly rate {} outside [0, 0.5]", cfg.rate)));
    }
    let len = cfg.len;
    let train_end = len * 5 / 8;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, SYNTH_NOISE).expect("valid sigma");
    let omega = 2.0 * PI / SYNTH_PERIOD as f64;

    let mut values = Array2::zeros((len, cfg.channels));
    let mut labels = vec![false; len];
    let mut events = Vec::new();
    // std of a unit sinusoid
    let sig_std = std::f64::consts::FRAC_1_SQRT_2;

    for c in 0..cfg.channels {
        let phase = rng.random_range(0.0..2.0 * PI);
        let clean: Vec<f64> = (0..len).map(|t| (omega * t as f64 + phase).sin()).collect();
        for t in 0..len {
            values[[t, c]] = clean[t] + noise.sample(&mut rng);
        }

        let test_len = len - train_end;
        let budget = (cfg.rate * test_len as f64).round() as usize;
        let mut taken = vec![false; len];
        let mut covered = 0usize;
        let mut kinds = AnomalyKind::ROTATION.iter().cycle();
        while covered < budget {
            let kind = *kinds.next().expect("cycle");
            let span = kind.span();
            // keep a clean margin between events so each stays a separate segment
            let margin = 5;
            let candidates: Vec<usize> = (train_end + margin..len.saturating_sub(span + margin))
                .filter(|&s| !taken[s - margin..s + span + margin].iter().any(|&b| b))
                .collect();
            let Some(&start) = candidates.choose(&mut rng) else {
                break;
            };
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            for i in 0..span {
                let t = start + i;
                let eps = noise.sample(&mut rng);
                values[[t, c]] = match kind {
                    AnomalyKind::GlobalPoint => clean[t] + sign * 5.0 * sig_std + eps,
                    AnomalyKind::ContextualPoint => {
                        let dir = if clean[t] >= 0.0 { -1.0 } else { 1.0 };
                        (clean[t] + dir * 3.0 * sig_std).clamp(-1.0, 1.0) + eps
                    }
                    AnomalyKind::Seasonal => (2.0 * omega * t as f64 + phase).sin() + eps,
                    AnomalyKind::Trend => {
                        values[[t, c]] + 2.0 * (i + 1) as f64 / span as f64
                    }
                    AnomalyKind::Shapelet => {
                        let s = (omega * t as f64 + phase).sin();
                        s.signum() + eps
                    }
                };
                taken[t] = true;
                labels[t] = true;
            }
            events.push((c, start, kind));
            covered += span;
        }
    }

    Ok(SynthDataset {
        series: LabeledSeries { values, labels },
        train_end,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::rfft;

    #[test]
    fn deterministic_and_clean_training_rows() {
        let cfg = SynthConfig { seed: 3, ..SynthConfig::default() };
        let a = synth_anomaly(&cfg).unwrap();
        let b = synth_anomaly(&cfg).unwrap();
        assert_eq!(a.series, b.series);
        assert_eq!(a.train_end, 2500);
        assert_eq!(a.series.values.nrows(), 4000);
        assert!(a.series.labels[..2500].iter().all(|&l| !l));
        let other = synth_anomaly(&SynthConfig { seed: 4, ..cfg }).unwrap();
        assert_ne!(a.series.values, other.series.values);
    }

    #[test]
    fn label_fraction_matches_rate() {
        let cfg = SynthConfig { channels: 1, seed: 11, ..SynthConfig::default() };
        let d = synth_anomaly(&cfg).unwrap();
        let positives = d.series.labels.iter().filter(|&&l| l).count();
        // budget of 75 steps, overshoot bounded by one segment
        assert!((75..75 + SEGMENT_LEN).contains(&positives), "{positives}");
        let kinds: Vec<_> = d.events.iter().map(|e| e.2).collect();
        assert_eq!(&kinds[..5], &AnomalyKind::ROTATION);
    }

    #[test]
    fn zero_rate_has_no_labels() {
        let d = synth_anomaly(&SynthConfig { rate: 0.0, channels: 2, ..SynthConfig::default() }).unwrap();
        assert!(d.series.labels.iter().all(|&l| !l));
        assert!(d.events.is_empty());
    }

    #[test]
    fn clean_signal_spectrum_peaks_at_base_bin() {
        let d = synth_anomaly(&SynthConfig { rate: 0.0, seed: 5, ..SynthConfig::default() }).unwrap();
        let x = d.series.values.column(0).to_vec();
        let s = rfft(&x).unwrap();
        let total: f64 = s.bins()[1..].iter().map(|z| z.norm_sqr()).sum();
        let target = 4000 / SYNTH_PERIOD;
        let near: f64 = s.bins()[target - 1..=target + 1].iter().map(|z| z.norm_sqr()).sum();
        assert!(near / total > 0.9, "{}", near / total);
    }

    #[test]
    fn rejects_short_series() {
        assert!(synth_anomaly(&SynthConfig { len: 50, ..SynthConfig::default() }).is_err());
    }
}
