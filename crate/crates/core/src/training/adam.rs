use serde::{Deserialize, Serialize};

use crate::error::{FitsError, Result};

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    pub seed: u64,
    pub seeds_for_reporting: Vec<u64>,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            batch_size: 64,
            max_epochs: 50,
            patience: 5,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            seed: 0,
            seeds_for_reporting: vec![0, 1, 2, 3, 4],
        }
    }
}

impl TrainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(FitsError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(FitsError::Config("batch_size must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(FitsError::Config("patience must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(FitsError::Config("max_epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(FitsError::Config("Adam betas must lie in [0, 1)".into()));
        }
        if self.seeds_for_reporting.is_empty() {
            return Err(FitsError::Config("at least one seed is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update over real scalars (complex parameters
/// enter as their interleaved real and imaginary parts).
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    spec: &TrainSpec,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() || state.v.len() != state.m.len() {
        return Err(FitsError::shape(format!(
            "params {}, grads {}, moments {}/{}",
            params.len(),
            grads.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - spec.beta1.powi(t);
    let bc2 = 1.0 - spec.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = spec.beta1 * state.m[i] + (1.0 - spec.beta1) * g;
        state.v[i] = spec.beta2 * state.v[i] + (1.0 - spec.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= spec.learning_rate * m_hat / (v_hat.sqrt() + spec.eps_adam);
    }
    Ok(())
}
