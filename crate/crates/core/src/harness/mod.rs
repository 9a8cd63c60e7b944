//! Configuration-driven Monte Carlo runs, sweeps and exports.
//!
//! Each replicate `r` at grid point `g` draws every random quantity from
//! streams under `derive(seed, [g, r])`, so emitted numbers do not depend on
//! the worker count.

pub mod config;
pub mod histogram;
pub mod io;
pub mod run;
pub mod sweep;

pub use config::{OutputPaths, ResolvedConfig, RunConfig, WORKERS_ENV};
pub use histogram::{histogram_export, Gaussian, Histogram, HistogramBin, HistogramOverlay};
pub use run::{
    run_replications, run_replications_with, DiagnosticRow, GridMetadata, Overlay, ReplicateContext,
    ReplicateEstimator, ResultRow, ResultTable, RunMetadata, TheoryPredictions,
};
pub use sweep::{mse_sweep, mse_sweep_with, ols, summarize, MsePoint, SlopeFit, SweepResult};
