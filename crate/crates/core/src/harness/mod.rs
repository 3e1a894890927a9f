//! Seeded multi-trial experiments: initial-point cache, metrics,
//! aggregation and result files.

mod cache;
mod config;
mod metrics;
mod output;
mod run;

pub use cache::{cache_path, initial_point_cache, stream_rng, CachedInit, Stream};
pub use config::{default_sigma0, ExperimentConfig, Method, NoiseModel};
pub use metrics::{aggregate, aggregate_on, evaluate_metrics, quantile_sorted, quantiles, Aggregate, Quantiles};
pub use output::{kde, read_csv, render_svg, write_csv, CellStatus, Manifest, CSV_HEADER};
pub use run::{estimate_noise_variance, rerun_from_manifest, run_experiment, run_trial, ExperimentOutcome, Problem};
