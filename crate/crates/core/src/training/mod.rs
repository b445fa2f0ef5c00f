//! Fitting the layer: Adam, early stopping on validation MSE, multi-seed
//! forecasting runs, and grid search over look-back and harmonic order.

mod adam;
mod grid;
mod train;

pub use adam::{adam_step, AdamState, TrainSpec};
pub use grid::{
    grid_search, read_grid_csv, run_forecast, select_row, write_grid_csv, write_history_csv,
    ForecastTask, GridAxes, GridPoint, GridResult, GridRow, SeedRun, Split,
};
pub use train::{evaluate, train, EpochRecord, EvalMetrics, TrainOutcome, WindowSource};
