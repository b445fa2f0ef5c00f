//! Real-input DFTs with a fixed convention, low-pass truncation, zero
//! padding, and phase utilities.
//!
//! Convention: the forward transform is unnormalized,
//! `X[k] = sum_t x[t] e^{-j 2 pi k t / N}`, and the inverse carries the
//! `1/N` factor. Only even lengths are accepted.

mod fft;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{FitsError, Result};

pub use fft::{real_plan, ComplexFft, RealFft};

/// Frequency bins of a real signal of length `source_len`.
///
/// A full spectrum has `source_len / 2 + 1` bins. Low-passed spectra keep
/// the same `source_len` with fewer bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
    source_len: usize,
}

impl Spectrum {
    pub fn new(bins: Vec<Complex64>, source_len: usize) -> Result<Self> {
        check_even_len(source_len)?;
        if bins.is_empty() || bins.len() > source_len / 2 + 1 {
            return Err(FitsError::shape(format!(
                "{} bins cannot describe a length-{} signal",
                bins.len(),
                source_len
            )));
        }
        Ok(Self { bins, source_len })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn into_bins(self) -> Vec<Complex64> {
        self.bins
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn is_full(&self) -> bool {
        self.bins.len() == self.source_len / 2 + 1
    }

    /// Keeps DC plus the first `k_cut` non-DC bins.
    pub fn low_passed(&self, k_cut: usize) -> Result<Spectrum> {
        let (dc, kept) = truncate_spectrum(self, k_cut)?;
        let mut bins = Vec::with_capacity(k_cut + 1);
        bins.push(dc);
        bins.extend(kept);
        Ok(Spectrum {
            bins,
            source_len: self.source_len,
        })
    }
}

/// Amplitude and phase of one complex bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarComponent {
    pub amplitude: f64,
    /// Radians in `(-pi, pi]`.
    pub phase: f64,
}

impl PolarComponent {
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(
            self.amplitude * self.phase.cos(),
            self.amplitude * self.phase.sin(),
        )
    }
}

fn check_even_len(n: usize) -> Result<()> {
    if n == 0 {
        return Err(FitsError::InvalidLength {
            len: n,
            reason: "length must be positive",
        });
    }
    if !n.is_multiple_of(2) {
        return Err(FitsError::InvalidLength {
            len: n,
            reason: "only even lengths are supported",
        });
    }
    Ok(())
}

pub fn rfft(x: &[f64]) -> Result<Spectrum> {
    check_even_len(x.len())?;
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(FitsError::InvalidValue(format!(
            "non-finite sample {} at index {i}",
            x[i]
        )));
    }
    let n = x.len();
    let mut bins = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
    real_plan(n).forward(x, &mut bins);
    Ok(Spectrum {
        bins,
        source_len: n,
    })
}

/// Inverse of [`rfft`]. Imaginary parts of the DC and Nyquist bins do not
/// contribute to the output.
pub fn irfft(s: &Spectrum) -> Result<Vec<f64>> {
    if !s.is_full() {
        return Err(FitsError::shape(format!(
            "irfft needs {} bins for length {}, got {}",
            s.source_len / 2 + 1,
            s.source_len,
            s.bins.len()
        )));
    }
    let mut out = vec![0.0; s.source_len];
    real_plan(s.source_len).inverse(&s.bins, &mut out);
    Ok(out)
}

/// Bin index of a period `period` inside a window of `window` samples.
pub fn base_frequency(window: usize, period: usize) -> Result<usize> {
    if period == 0 {
        return Err(FitsError::InvalidArgument("base period must be positive".into()));
    }
    if window == 0 {
        return Err(FitsError::InvalidArgument("window length must be positive".into()));
    }
    Ok(window / period)
}

/// Number of non-DC bins kept by a low-pass filter placed at harmonic
/// `harmonic` of the base frequency: `harmonic * (window / period + 1) + 10`,
/// clamped to `window / 2`.
pub fn cutoff_bins(window: usize, period: usize, harmonic: usize) -> Result<usize> {
    let base = base_frequency(window, period)?;
    if harmonic == 0 {
        return Err(FitsError::InvalidArgument("harmonic order must be positive".into()));
    }
    Ok((harmonic * (base + 1) + 10).min(window / 2))
}

/// Splits off the DC bin and keeps bins `1..=k_cut`.
pub fn truncate_spectrum(s: &Spectrum, k_cut: usize) -> Result<(Complex64, Vec<Complex64>)> {
    if k_cut + 1 > s.bins.len() {
        return Err(FitsError::shape(format!(
            "cutoff {k_cut} exceeds the {} non-DC bins available",
            s.bins.len() - 1
        )));
    }
    Ok((s.bins[0], s.bins[1..=k_cut].to_vec()))
}

/// Builds the full spectrum `[0, y..., 0, ...]` of a length-`out_len` signal.
pub fn pad_and_restore_dc(y: &[Complex64], out_len: usize) -> Result<Spectrum> {
    check_even_len(out_len)?;
    if y.len() > out_len / 2 {
        return Err(FitsError::shape(format!(
            "{} bins do not fit below the Nyquist bin of a length-{out_len} signal",
            y.len()
        )));
    }
    let mut bins = vec![Complex64::new(0.0, 0.0); out_len / 2 + 1];
    bins[1..=y.len()].copy_from_slice(y);
    Ok(Spectrum {
        bins,
        source_len: out_len,
    })
}

/// Spectrum of the signal circularly delayed by `shift` samples.
pub fn time_shift_spectrum(s: &Spectrum, shift: i64) -> Spectrum {
    let n = s.source_len as i64;
    let bins = s
        .bins
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let turns = (k as i64 * shift).rem_euclid(n);
            b * Complex64::from_polar(1.0, -2.0 * PI * turns as f64 / n as f64)
        })
        .collect();
    Spectrum {
        bins,
        source_len: s.source_len,
    }
}

/// Polar decomposition; zero maps to phase 0.
pub fn polar(z: Complex64) -> PolarComponent {
    if z.re == 0.0 && z.im == 0.0 {
        return PolarComponent {
            amplitude: 0.0,
            phase: 0.0,
        };
    }
    PolarComponent {
        amplitude: z.norm(),
        phase: wrap_phase(z.im.atan2(z.re)),
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn rfft_constant_and_cosine() {
        let s = rfft(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let expected = [c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(s.bins().iter().zip(&expected).all(|(a, b)| close(*a, *b, 1e-12)));
        assert_eq!(s.source_len(), 4);

        let s = rfft(&[1.0, 0.0, -1.0, 0.0]).unwrap();
        let expected = [c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)];
        assert!(s.bins().iter().zip(&expected).all(|(a, b)| close(*a, *b, 1e-12)));
    }

    #[test]
    fn rfft_rejects_bad_input() {
        assert!(matches!(rfft(&[1.0, 2.0, 3.0]), Err(FitsError::InvalidLength { .. })));
        assert!(matches!(rfft(&[]), Err(FitsError::InvalidLength { .. })));
        assert!(matches!(rfft(&[1.0, f64::NAN]), Err(FitsError::InvalidValue(_))));
    }

    #[test]
    fn irfft_hand_cases() {
        let s = Spectrum::new(vec![c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 4).unwrap();
        assert_eq!(irfft(&s).unwrap(), vec![1.0, 1.0, 1.0, 1.0]);
        let s = Spectrum::new(vec![c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)], 4).unwrap();
        let x = irfft(&s).unwrap();
        for (a, b) in x.iter().zip([1.0, 0.0, -1.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn irfft_rejects_partial_spectrum() {
        let s = Spectrum::new(vec![c(1.0, 0.0), c(0.0, 0.0)], 8).unwrap();
        assert!(matches!(irfft(&s), Err(FitsError::Shape(_))));
        assert!(Spectrum::new(vec![c(0.0, 0.0); 6], 8).is_err());
    }

    #[test]
    fn base_frequency_cases() {
        assert_eq!(base_frequency(480, 24).unwrap(), 20);
        assert_eq!(base_frequency(720, 24).unwrap(), 30);
        assert_eq!(base_frequency(90, 96).unwrap(), 0);
        assert!(base_frequency(90, 0).is_err());
    }

    #[test]
    fn cutoff_bins_cases() {
        assert_eq!(cutoff_bins(720, 24, 2).unwrap(), 72);
        assert_eq!(cutoff_bins(90, 96, 4).unwrap(), 14);
        assert_eq!(cutoff_bins(90, 144, 5).unwrap(), 15);
        // 10 * 4 + 10 = 50 exceeds the 45 available bins
        assert_eq!(cutoff_bins(90, 24, 10).unwrap(), 45);
        assert!(cutoff_bins(90, 24, 0).is_err());
    }

    #[test]
    fn cutoff_bins_monotone() {
        for period in [24usize, 96, 144] {
            for window in (2..800).step_by(2) {
                let mut prev = 0;
                for n in 1..20 {
                    let k = cutoff_bins(window, period, n).unwrap();
                    assert!(k >= prev);
                    prev = k;
                }
            }
            for n in 1..10 {
                let mut prev = 0;
                for window in 1..800 {
                    let k = cutoff_bins(window, period, n).unwrap();
                    assert!(k >= prev, "window {window} n {n}");
                    prev = k;
                }
            }
        }
    }

    #[test]
    fn truncate_cases() {
        let s = Spectrum::new(vec![c(5.0, 0.0), c(1.0, 1.0), c(2.0, 0.0), c(3.0, 0.0)], 6).unwrap();
        let (dc, kept) = truncate_spectrum(&s, 2).unwrap();
        assert_eq!(dc, c(5.0, 0.0));
        assert_eq!(kept, vec![c(1.0, 1.0), c(2.0, 0.0)]);

        let (_, all) = truncate_spectrum(&s, 3).unwrap();
        assert_eq!(all, s.bins()[1..].to_vec());

        assert!(matches!(truncate_spectrum(&s, 4), Err(FitsError::Shape(_))));

        let once = s.low_passed(2).unwrap();
        assert_eq!(once.low_passed(2).unwrap(), once);
    }

    #[test]
    fn pad_cases() {
        let s = pad_and_restore_dc(&[c(1.0, 1.0)], 6).unwrap();
        assert_eq!(s.bins(), &[c(0.0, 0.0), c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(s.source_len(), 6);

        let y = vec![c(1.0, 2.0), c(3.0, 4.0), c(5.0, 0.0)];
        let s = pad_and_restore_dc(&y, 6).unwrap();
        assert_eq!(&s.bins()[1..], y.as_slice());
        assert_eq!(s.bins()[0], c(0.0, 0.0));

        assert!(matches!(pad_and_restore_dc(&y, 4), Err(FitsError::Shape(_))));
        assert!(matches!(pad_and_restore_dc(&y, 7), Err(FitsError::InvalidLength { .. })));
    }

    #[test]
    fn time_shift_zero_is_identity() {
        let s = rfft(&[0.3, -1.2, 2.0, 0.5, 0.0, 1.0]).unwrap();
        assert_eq!(time_shift_spectrum(&s, 0), s);
    }

    #[test]
    fn polar_cases() {
        assert_eq!(polar(c(1.0, 0.0)), PolarComponent { amplitude: 1.0, phase: 0.0 });
        let p = polar(c(0.0, 1.0));
        assert!((p.amplitude - 1.0).abs() < 1e-15);
        assert!((p.phase - PI / 2.0).abs() < 1e-15);
        assert_eq!(polar(c(0.0, 0.0)), PolarComponent { amplitude: 0.0, phase: 0.0 });
        assert_eq!(polar(c(-0.0, 0.0)).phase, 0.0);
        // negative real axis lands on +pi, never -pi
        assert_eq!(polar(c(-1.0, -0.0)).phase, PI);
    }
}
