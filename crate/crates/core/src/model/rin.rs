//! Reversible instance normalization over the time axis of one window.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{FitsError, Result};

pub const RIN_EPS: f64 = 1e-5;

/// Per-channel statistics of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RinState {
    pub mean: Vec<f64>,
    /// Population std floored at `eps`.
    pub std: Vec<f64>,
    pub eps: f64,
}

/// Normalizes each column of a `len x channels` window to zero mean and
/// unit population std.
pub fn rin_normalize(x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, RinState)> {
    let (len, channels) = x.dim();
    if len < 2 {
        return Err(FitsError::InvalidLength {
            len,
            reason: "instance normalization needs at least 2 timesteps",
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(FitsError::InvalidValue("non-finite value in window".into()));
    }
    let mut out = x.to_owned();
    let mut mean = Vec::with_capacity(channels);
    let mut std = Vec::with_capacity(channels);
    for mut col in out.axis_iter_mut(Axis(1)) {
        let m = col.sum() / len as f64;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / len as f64;
        let s = var.sqrt().max(RIN_EPS);
        col.mapv_inplace(|v| (v - m) / s);
        mean.push(m);
        std.push(s);
    }
    Ok((
        out,
        RinState {
            mean,
            std,
            eps: RIN_EPS,
        },
    ))
}

pub fn rin_denormalize(y: ArrayView2<'_, f64>, state: &RinState) -> Result<Array2<f64>> {
    if y.ncols() != state.mean.len() {
        return Err(FitsError::shape(format!(
            "window has {} channels, normalization state has {}",
            y.ncols(),
            state.mean.len()
        )));
    }
    let mut out = y.to_owned();
    for (c, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let (m, s) = (state.mean[c], state.std[c]);
        col.mapv_inplace(|v| v * s + m);
    }
    Ok(out)
}
