//! Synthetic benchmarks: data generation, scoring, grid search and the
//! iterations-per-reweighting sweep.

pub mod data;
pub mod grid;
pub mod metrics;
pub mod sweep;

pub use data::{
    empirical_covariance, generate, make_sparse_spd, offdiag_zero_fraction, sample_and_covariance, SpecError,
    SyntheticSpec,
};
pub use grid::{default_gamma_grid, grid_search, GridError, GridRow, GridTable, RowOutcome, DEFAULT_GRID_POINTS};
pub use metrics::{f1_support, metric_pair, nmse, MetricPair, ZeroTruth, DEFAULT_SUPPORT_TOL};
pub use sweep::{budget_sweep, write_sweep_csv, PenaltySpec, SweepError, SweepOutput, SweepRow, SweepSpec};
