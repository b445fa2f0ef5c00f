//! Binary model checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | content                                               |
//! |--------|------|-------------------------------------------------------|
//! | 0      | 8    | magic `FITSCKP1` (last byte is the format version)    |
//! | 8      | 72   | nine `u64`: input_len, output_len, period, harmonic (0 = no filter), k_cut, n_in, n_out, supervision (0 = F, 1 = B+F), channels |
//! | 80     | 16·n_in·n_out | weights, row-major, each entry `(re: f64, im: f64)` |
//! | ...    | 16·n_out | bias, `(re, im)` pairs                             |
//!
//! On load the derived integers (`k_cut`, `n_in`, `n_out`) are recomputed
//! from the primary ones and must agree.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::{ComplexLinear, FitsConfig, Supervision};
use crate::error::{FitsError, Result};

pub const MAGIC: &[u8; 8] = b"FITSCKP1";
const HEADER_INTS: usize = 9;

pub fn encode_checkpoint(cfg: &FitsConfig, layer: &ComplexLinear) -> Result<Vec<u8>> {
    layer.matches(cfg)?;
    let ints = [
        cfg.input_len,
        cfg.output_len,
        cfg.period,
        cfg.harmonic.unwrap_or(0),
        cfg.k_cut,
        cfg.n_in,
        cfg.n_out,
        match cfg.supervision {
            Supervision::ForecastOnly => 0,
            Supervision::BackcastAndForecast => 1,
        },
        cfg.channels,
    ];
    let mut buf = Vec::with_capacity(8 + 8 * HEADER_INTS + 16 * layer.complex_len());
    buf.extend_from_slice(MAGIC);
    for v in ints {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for z in layer.weights().iter().chain(layer.bias().iter()) {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    Ok(buf)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(FitsConfig, ComplexLinear)> {
    let bad = |msg: String| FitsError::Checkpoint(msg);
    if bytes.len() < 8 + 8 * HEADER_INTS {
        return Err(bad(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(bad("bad magic header".into()));
    }
    let mut ints = [0usize; HEADER_INTS];
    for (i, v) in ints.iter_mut().enumerate() {
        let at = 8 + 8 * i;
        let raw = u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
        *v = usize::try_from(raw).map_err(|_| bad(format!("header field {i} overflows")))?;
    }
    let [input_len, output_len, period, harmonic, k_cut, n_in, n_out, sup, channels] = ints;
    let supervision = match sup {
        0 => Supervision::ForecastOnly,
        1 => Supervision::BackcastAndForecast,
        other => return Err(bad(format!("unknown supervision code {other}"))),
    };
    let harmonic = (harmonic > 0).then_some(harmonic);
    let cfg = FitsConfig::new(input_len, output_len, period, harmonic, supervision, channels)
        .map_err(|e| bad(format!("inconsistent config: {e}")))?;
    if (cfg.k_cut, cfg.n_in, cfg.n_out) != (k_cut, n_in, n_out) {
        return Err(bad(format!(
            "stored sizes ({k_cut}, {n_in}, {n_out}) disagree with derived ({}, {}, {})",
            cfg.k_cut, cfg.n_in, cfg.n_out
        )));
    }
    let body = &bytes[8 + 8 * HEADER_INTS..];
    let entries = n_in * n_out + n_out;
    if body.len() != 16 * entries {
        return Err(bad(format!(
            "expected {} parameter bytes, found {}",
            16 * entries,
            body.len()
        )));
    }
    let mut values = body.chunks_exact(16).map(|c| {
        let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
        Complex64::new(re, im)
    });
    let weights = Array2::from_shape_simple_fn((n_in, n_out), || values.next().expect("sized"));
    let bias = Array1::from_shape_simple_fn(n_out, || values.next().expect("sized"));
    Ok((cfg, ComplexLinear::from_parts(weights, bias)?))
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn save_checkpoint(path: &Path, cfg: &FitsConfig, layer: &ComplexLinear) -> Result<()> {
    let bytes = encode_checkpoint(cfg, layer)?;
    let tmp = path.with_extension("ckpt.tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| FitsError::io(&tmp, e))?;
    f.write_all(&bytes).map_err(|e| FitsError::io(&tmp, e))?;
    f.sync_all().map_err(|e| FitsError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| FitsError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(FitsConfig, ComplexLinear)> {
    let bytes = fs::read(path).map_err(|e| FitsError::io(path, e))?;
    decode_checkpoint(&bytes)
}
