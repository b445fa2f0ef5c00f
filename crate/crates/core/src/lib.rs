//! Frequency-interpolation time series analysis.
//!
//! A segment is normalized per instance, projected with a real FFT,
//! low-pass truncated, mapped through one complex-valued linear layer onto
//! the spectrum of a longer segment, and brought back to the time domain.
//! The same pipeline forecasts (look-back to look-back plus horizon) and
//! reconstructs (downsampled window to full window) for anomaly detection.

pub mod anomaly;
pub mod cli;
pub mod data;
pub mod error;
pub mod model;
pub mod spectral;
pub mod training;

pub use error::{FitsError, Result};
