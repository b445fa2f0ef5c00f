//! The frequency-interpolation network: instance normalization, one
//! complex-valued linear layer between spectral truncation and zero padding,
//! its analytic gradient, parameter accounting, and checkpoints.

mod checkpoint;
mod config;
mod layer;
mod pipeline;
mod rin;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, MAGIC};
pub use config::{param_count, FitsConfig, Supervision};
pub use layer::{complex_linear_forward, init_params, ComplexLinear};
pub use pipeline::{
    encode_window, fits_backward, fits_forward, interpolate_normalized, rows_forward,
    rows_gradients, target_rows, Gradients, SpectralRows,
};
pub use rin::{rin_denormalize, rin_normalize, RinState, RIN_EPS};
