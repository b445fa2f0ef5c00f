//! Forward pipeline and its exact gradient.
//!
//! Per channel: RIN, rFFT, low-pass truncation (DC dropped), complex linear
//! layer, zero padding with a zero DC bin, irFFT, inverse RIN. Weights are
//! shared across channels, so a batch of windows is processed as a stack of
//! `windows * channels` spectral rows.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use super::layer::{complex_linear_forward, ComplexLinear};
use super::rin::{rin_normalize, RinState};
use super::FitsConfig;
use crate::error::{FitsError, Result};
use crate::spectral::{irfft, pad_and_restore_dc, real_plan, rfft, truncate_spectrum};

/// Low-passed spectra of normalized channel windows, one row per
/// `(window, channel)` pair in window-major order.
#[derive(Debug, Clone)]
pub struct SpectralRows {
    pub spectra: Array2<Complex64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl SpectralRows {
    pub fn encode(inputs: &[ArrayView2<'_, f64>], cfg: &FitsConfig) -> Result<Self> {
        let encoded: Vec<(Array2<Complex64>, RinState)> = inputs
            .par_iter()
            .map(|x| encode_window(*x, cfg))
            .collect::<Result<_>>()?;
        let rows: usize = encoded.iter().map(|(s, _)| s.nrows()).sum();
        let mut spectra = Array2::zeros((rows, cfg.n_in));
        let mut mean = Vec::with_capacity(rows);
        let mut std = Vec::with_capacity(rows);
        let mut r = 0;
        for (s, st) in encoded {
            for row in s.axis_iter(Axis(0)) {
                spectra.row_mut(r).assign(&row);
                r += 1;
            }
            mean.extend(st.mean);
            std.extend(st.std);
        }
        Ok(Self { spectra, mean, std })
    }

    pub fn len(&self) -> usize {
        self.spectra.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            spectra: self.spectra.select(Axis(0), rows),
            mean: rows.iter().map(|&r| self.mean[r]).collect(),
            std: rows.iter().map(|&r| self.std[r]).collect(),
        }
    }
}

/// Stages 1-3 for one `input_len x channels` window: returns the kept bins
/// (`channels x n_in`) and the instance statistics.
pub fn encode_window(
    x: ArrayView2<'_, f64>,
    cfg: &FitsConfig,
) -> Result<(Array2<Complex64>, RinState)> {
    if x.nrows() != cfg.input_len {
        return Err(FitsError::shape(format!(
            "input window has {} steps, config expects {}",
            x.nrows(),
            cfg.input_len
        )));
    }
    let (norm, state) = rin_normalize(x)?;
    let mut spectra = Array2::zeros((norm.ncols(), cfg.n_in));
    for (c, col) in norm.axis_iter(Axis(1)).enumerate() {
        let s = rfft(&col.to_vec())?;
        let (_dc, kept) = truncate_spectrum(&s, cfg.k_cut)?;
        spectra.row_mut(c).assign(&Array1::from(kept));
    }
    Ok((spectra, state))
}

/// Stages 5-6: zero-mean time signal of `output_len` steps from `n_out` bins.
fn synthesize_row(y: ArrayView1<'_, Complex64>, out_len: usize, mut out: ArrayViewMut1<'_, f64>) {
    let mut bins = vec![Complex64::new(0.0, 0.0); out_len / 2 + 1];
    for (b, v) in bins[1..].iter_mut().zip(y.iter()) {
        *b = *v;
    }
    let mut buf = vec![0.0; out_len];
    real_plan(out_len).inverse(&bins, &mut buf);
    out.assign(&ArrayView1::from(&buf[..]));
}

/// Denormalized outputs, `rows x output_len`.
pub fn rows_forward(
    rows: &SpectralRows,
    cfg: &FitsConfig,
    layer: &ComplexLinear,
) -> Result<Array2<f64>> {
    layer.matches(cfg)?;
    let y = complex_linear_forward(rows.spectra.view(), layer)?;
    let mut out = Array2::zeros((rows.len(), cfg.output_len));
    Zip::indexed(out.rows_mut())
        .and(y.rows())
        .par_for_each(|r, mut o, yr| {
            synthesize_row(yr, cfg.output_len, o.view_mut());
            let (m, s) = (rows.mean[r], rows.std[r]);
            o.mapv_inplace(|v| v * s + m);
        });
    Ok(out)
}

/// Loss and its gradient with respect to the real and imaginary parts of
/// every weight and bias entry (real part = d/dRe, imaginary part = d/dIm).
#[derive(Debug, Clone)]
pub struct Gradients {
    pub loss: f64,
    pub d_weights: Array2<Complex64>,
    pub d_bias: Array1<Complex64>,
}

impl Gradients {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * (self.d_weights.len() + self.d_bias.len()));
        for z in self.d_weights.iter().chain(self.d_bias.iter()) {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }
}

/// Mean squared error over the supervised span of every row, and its gradient.
///
/// `targets` holds one row per spectral row with `supervised_span().1` columns.
pub fn rows_gradients(
    rows: &SpectralRows,
    targets: ArrayView2<'_, f64>,
    cfg: &FitsConfig,
    layer: &ComplexLinear,
) -> Result<Gradients> {
    let (start, span) = cfg.supervised_span();
    if targets.dim() != (rows.len(), span) {
        return Err(FitsError::shape(format!(
            "targets are {:?}, expected ({}, {span})",
            targets.dim(),
            rows.len()
        )));
    }
    if rows.is_empty() {
        return Err(FitsError::EmptySplit("gradient batch"));
    }
    let out = rows_forward(rows, cfg, layer)?;
    let n = cfg.output_len;
    let scale = 2.0 / (rows.len() * span) as f64;

    let mut grad_y = Array2::<Complex64>::zeros((rows.len(), cfg.n_out));
    let mut sq_err = vec![0.0; rows.len()];
    Zip::indexed(grad_y.rows_mut())
        .and(out.rows())
        .and(targets.rows())
        .and(&mut sq_err[..])
        .par_for_each(|r, mut g, o, t, err| {
            // dLoss/d(normalized time output), zero outside the supervised span
            let mut g_time = vec![0.0; n];
            let mut acc = 0.0;
            for (k, (&ov, &tv)) in o.iter().skip(start).zip(t.iter()).enumerate() {
                let resid = ov - tv;
                acc += resid * resid;
                g_time[start + k] = scale * resid * rows.std[r];
            }
            *err = acc;
            // adjoint of irfft restricted to bins 1..=n_out
            let mut spec = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
            real_plan(n).forward(&g_time, &mut spec);
            for (j, gj) in g.iter_mut().enumerate() {
                let k = j + 1;
                let w = if k == n / 2 { 1.0 } else { 2.0 };
                *gj = spec[k] * (w / n as f64);
            }
        });

    let loss = sq_err.iter().sum::<f64>() / (rows.len() * span) as f64;
    if !loss.is_finite() {
        return Err(FitsError::Numeric(format!("loss is {loss}")));
    }
    let d_weights = rows.spectra.t().mapv(|z| z.conj()).dot(&grad_y);
    let d_bias = grad_y.sum_axis(Axis(0));
    Ok(Gradients {
        loss,
        d_weights,
        d_bias,
    })
}

/// Stacks per-window targets (`steps x channels`) into per-row targets.
pub fn target_rows(targets: &[ArrayView2<'_, f64>], cfg: &FitsConfig) -> Result<Array2<f64>> {
    let (_, span) = cfg.supervised_span();
    let channels = targets.first().map_or(0, |t| t.ncols());
    let mut out = Array2::zeros((targets.len() * channels, span));
    for (w, t) in targets.iter().enumerate() {
        if t.nrows() != span || t.ncols() != channels {
            return Err(FitsError::shape(format!(
                "target {w} is {:?}, expected ({span}, {channels}) for {} supervision",
                t.dim(),
                cfg.supervision
            )));
        }
        for c in 0..channels {
            out.row_mut(w * channels + c).assign(&t.column(c));
        }
    }
    Ok(out)
}

/// Full pipeline on one `input_len x channels` window; returns
/// `output_len x channels`.
pub fn fits_forward(
    x: ArrayView2<'_, f64>,
    cfg: &FitsConfig,
    layer: &ComplexLinear,
) -> Result<Array2<f64>> {
    let rows = SpectralRows::encode(&[x], cfg)?;
    Ok(rows_forward(&rows, cfg, layer)?.reversed_axes())
}

/// Stages 2-6 on an already normalized window: no instance statistics are
/// applied, so the map is linear in `x_norm` up to the bias.
pub fn interpolate_normalized(
    x_norm: ArrayView2<'_, f64>,
    cfg: &FitsConfig,
    layer: &ComplexLinear,
) -> Result<Array2<f64>> {
    layer.matches(cfg)?;
    let mut out = Array2::zeros((cfg.output_len, x_norm.ncols()));
    for (c, col) in x_norm.axis_iter(Axis(1)).enumerate() {
        let s = rfft(&col.to_vec())?;
        let (_dc, kept) = truncate_spectrum(&s, cfg.k_cut)?;
        let y = complex_linear_forward(Array2::from_shape_vec((1, kept.len()), kept)
            .expect("row shape")
            .view(), layer)?;
        let padded = pad_and_restore_dc(y.row(0).as_slice().expect("contiguous"), cfg.output_len)?;
        out.column_mut(c).assign(&Array1::from(irfft(&padded)?));
    }
    Ok(out)
}

/// Batch loss and gradient for windows `inputs[i]` (`input_len x C`) and
/// targets (`output_len x C` for backcast+forecast, `horizon x C` otherwise).
pub fn fits_backward(
    inputs: &[ArrayView2<'_, f64>],
    targets: &[ArrayView2<'_, f64>],
    cfg: &FitsConfig,
    layer: &ComplexLinear,
) -> Result<Gradients> {
    if inputs.len() != targets.len() {
        return Err(FitsError::shape(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if let (Some(x), Some(t)) = (inputs.first(), targets.first()) {
        if x.ncols() != t.ncols() {
            return Err(FitsError::shape("input and target channel counts differ"));
        }
    }
    let rows = SpectralRows::encode(inputs, cfg)?;
    let t = target_rows(targets, cfg)?;
    rows_gradients(&rows, t.view(), cfg, layer)
}
