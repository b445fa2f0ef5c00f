use ndarray::{Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::FitsConfig;
use crate::error::{FitsError, Result};

/// The trainable state: `n_in x n_out` complex weights and `n_out` complex bias.
///
/// Each complex weight scales the amplitude and rotates the phase of one
/// input bin's contribution to one output bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexLinear {
    weights: Array2<Complex64>,
    bias: Array1<Complex64>,
}

impl ComplexLinear {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            weights: Array2::zeros((n_in, n_out)),
            bias: Array1::zeros(n_out),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut layer = Self::zeros(n, n);
        for i in 0..n {
            layer.weights[[i, i]] = Complex64::new(1.0, 0.0);
        }
        layer
    }

    pub fn from_parts(weights: Array2<Complex64>, bias: Array1<Complex64>) -> Result<Self> {
        if weights.ncols() != bias.len() {
            return Err(FitsError::shape(format!(
                "weights have {} columns but bias has {} entries",
                weights.ncols(),
                bias.len()
            )));
        }
        Ok(Self { weights, bias })
    }

    pub fn n_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_out(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &Array2<Complex64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<Complex64> {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut Array1<Complex64> {
        &mut self.bias
    }

    pub fn complex_len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Parameters as interleaved `(re, im)` scalars: weights row-major, then bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.complex_len());
        for z in self.weights.iter().chain(self.bias.iter()) {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != 2 * self.complex_len() {
            return Err(FitsError::shape(format!(
                "expected {} real scalars, got {}",
                2 * self.complex_len(),
                flat.len()
            )));
        }
        let mut pairs = flat.chunks_exact(2);
        for z in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            let p = pairs.next().expect("length checked");
            *z = Complex64::new(p[0], p[1]);
        }
        Ok(())
    }

    pub fn matches(&self, cfg: &FitsConfig) -> Result<()> {
        if self.n_in() != cfg.n_in || self.n_out() != cfg.n_out {
            return Err(FitsError::shape(format!(
                "layer is {}x{}, config expects {}x{}",
                self.n_in(),
                self.n_out(),
                cfg.n_in,
                cfg.n_out
            )));
        }
        Ok(())
    }
}

/// `Y = X W + b` with the bias broadcast over rows.
pub fn complex_linear_forward(
    x: ArrayView2<'_, Complex64>,
    layer: &ComplexLinear,
) -> Result<Array2<Complex64>> {
    if x.ncols() != layer.n_in() {
        return Err(FitsError::shape(format!(
            "input has {} bins, layer expects {}",
            x.ncols(),
            layer.n_in()
        )));
    }
    let mut y = x.dot(&layer.weights);
    for mut row in y.axis_iter_mut(Axis(0)) {
        row += &layer.bias;
    }
    Ok(y)
}

/// Real and imaginary weight parts drawn independently from
/// `U(-1/sqrt(n_in), 1/sqrt(n_in))`; bias starts at zero.
pub fn init_params(cfg: &FitsConfig, seed: u64) -> ComplexLinear {
    let bound = 1.0 / (cfg.n_in as f64).sqrt();
    let dist = Uniform::new(-bound, bound).expect("bound is positive and finite");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = Array2::from_shape_simple_fn((cfg.n_in, cfg.n_out), || {
        let re = dist.sample(&mut rng);
        let im = dist.sample(&mut rng);
        Complex64::new(re, im)
    });
    ComplexLinear {
        weights,
        bias: Array1::zeros(cfg.n_out),
    }
}
