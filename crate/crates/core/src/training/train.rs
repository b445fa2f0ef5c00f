use ndarray::{s, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState, TrainSpec};
use crate::data::WindowSet;
use crate::error::{FitsError, Result};
use crate::model::{rows_forward, rows_gradients, target_rows, ComplexLinear, FitsConfig, SpectralRows};

/// Encoded spectra are cached for the whole split below this many bytes.
const CACHE_BYTES: usize = 768 << 20;
const EVAL_CHUNK: usize = 256;

/// Windows a model can be fitted and scored on.
pub trait WindowSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn input(&self, i: usize) -> ArrayView2<'_, f64>;

    /// Rows matching the config's supervised span.
    fn target(&self, i: usize) -> ArrayView2<'_, f64>;

    /// Output offset and rows scored by validation and test metrics.
    fn eval_target(&self, i: usize) -> (usize, ArrayView2<'_, f64>);
}

impl WindowSource for WindowSet {
    fn len(&self) -> usize {
        WindowSet::len(self)
    }

    fn input(&self, i: usize) -> ArrayView2<'_, f64> {
        WindowSet::input(self, i)
    }

    fn target(&self, i: usize) -> ArrayView2<'_, f64> {
        WindowSet::target(self, i)
    }

    fn eval_target(&self, i: usize) -> (usize, ArrayView2<'_, f64>) {
        (self.input_len(), self.horizon_rows(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub layer: ComplexLinear,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mse: f64,
    pub mae: f64,
}

fn encode_range<S: WindowSource + ?Sized>(
    source: &S,
    windows: &[usize],
    cfg: &FitsConfig,
) -> Result<SpectralRows> {
    let inputs: Vec<_> = windows.iter().map(|&i| source.input(i)).collect();
    SpectralRows::encode(&inputs, cfg)
}

fn channels_of<S: WindowSource + ?Sized>(source: &S) -> usize {
    source.input(0).ncols()
}

/// MSE and MAE over the evaluation rows of every window.
pub fn evaluate<S: WindowSource + ?Sized>(
    source: &S,
    cfg: &FitsConfig,
    layer: &ComplexLinear,
) -> Result<EvalMetrics> {
    if source.is_empty() {
        return Err(FitsError::EmptySplit("evaluation windows"));
    }
    let channels = channels_of(source);
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut count = 0usize;
    let all: Vec<usize> = (0..source.len()).collect();
    for chunk in all.chunks(EVAL_CHUNK) {
        let rows = encode_range(source, chunk, cfg)?;
        let out = rows_forward(&rows, cfg, layer)?;
        for (k, &w) in chunk.iter().enumerate() {
            let (offset, truth) = source.eval_target(w);
            for c in 0..channels {
                let pred = out.row(k * channels + c);
                let pred = pred.slice(s![offset..offset + truth.nrows()]);
                for (p, t) in pred.iter().zip(truth.column(c).iter()) {
                    let e = p - t;
                    sq += e * e;
                    abs += e.abs();
                }
                count += truth.nrows();
            }
        }
    }
    let metrics = EvalMetrics {
        mse: sq / count as f64,
        mae: abs / count as f64,
    };
    if !metrics.mse.is_finite() {
        return Err(FitsError::Numeric(format!("evaluation MSE is {}", metrics.mse)));
    }
    Ok(metrics)
}

enum Encoded {
    Cached(SpectralRows),
    OnTheFly,
}

/// Mini-batch Adam with early stopping on validation MSE.
///
/// Each epoch shuffles the training windows with a generator seeded from
/// `spec.seed`. After `patience` epochs without a relative validation
/// improvement of at least `1e-6`, training stops and the best epoch's
/// parameters are returned.
pub fn train<S: WindowSource + ?Sized, V: WindowSource + ?Sized>(
    init: ComplexLinear,
    train_set: &S,
    val_set: &V,
    cfg: &FitsConfig,
    spec: &TrainSpec,
) -> Result<TrainOutcome> {
    spec.validate()?;
    init.matches(cfg)?;
    if train_set.is_empty() {
        return Err(FitsError::EmptySplit("training windows"));
    }
    if val_set.is_empty() {
        return Err(FitsError::EmptySplit("validation windows"));
    }
    let channels = channels_of(train_set);
    let n_windows = train_set.len();
    let cache_bytes = n_windows * channels * cfg.n_in * 16;
    let encoded = if cache_bytes <= CACHE_BYTES {
        let all: Vec<usize> = (0..n_windows).collect();
        Encoded::Cached(encode_range(train_set, &all, cfg)?)
    } else {
        Encoded::OnTheFly
    };

    let mut layer = init;
    let mut params = layer.to_flat();
    let mut adam = AdamState::new(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..n_windows).collect();

    let mut history = Vec::new();
    let mut best = (layer.clone(), f64::INFINITY, 0usize);
    let mut stale = 0usize;

    for epoch in 1..=spec.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(spec.batch_size) {
            let rows = match &encoded {
                Encoded::Cached(all) => {
                    let idx: Vec<usize> = batch
                        .iter()
                        .flat_map(|&w| (w * channels)..(w * channels + channels))
                        .collect();
                    all.select(&idx)
                }
                Encoded::OnTheFly => encode_range(train_set, batch, cfg)?,
            };
            let targets: Vec<_> = batch.iter().map(|&w| train_set.target(w)).collect();
            let t = target_rows(&targets, cfg)?;
            let grads = rows_gradients(&rows, t.view(), cfg, &layer).map_err(|e| match e {
                FitsError::Numeric(msg) => {
                    FitsError::Numeric(format!("epoch {epoch}: {msg}; check learning rate and inputs"))
                }
                other => other,
            })?;
            loss_sum += grads.loss * batch.len() as f64;
            adam_step(&mut params, &grads.to_flat(), &mut adam, spec)?;
            layer.set_flat(&params)?;
        }
        let train_mse = loss_sum / n_windows as f64;
        let val_mse = evaluate(val_set, cfg, &layer)?.mse;
        history.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
        });
        log::debug!("epoch {epoch}: train {train_mse:.6} val {val_mse:.6}");

        if val_mse < best.1 * (1.0 - 1e-6) {
            best = (layer.clone(), val_mse, epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= spec.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        layer: best.0,
        history,
        best_epoch: best.2,
        best_val: best.1,
    })
}
