//! Reconstruction-based anomaly detection: a model trained on normal data
//! rebuilds each window from a strided subsample, and timesteps with large
//! reconstruction error are flagged.

mod metrics;
mod score;

pub use metrics::{point_adjust, prf1, select_threshold, DetectionReport, MAX_THRESHOLD_CANDIDATES};
pub use score::{
    downsample, reconstruction_spec, score_series, train_reconstruction, AnomalyScores,
    ReconstructionWindows, DEFAULT_FACTOR, DEFAULT_VAL_FRACTION, DEFAULT_WINDOW,
    RECONSTRUCTION_LEARNING_RATE,
};
