//! Multi-seed experiments: config files, training runs, logs, summaries and
//! the plotting bundle.

mod config;
mod export;
mod run;
mod summary;

pub use config::ExperimentConfig;
pub use export::{contract_means, plot_export, BundleManifest, ContractMean, BUNDLE_FORMAT, CONTRACT_MEANS_HEADER};
pub use run::{run, LogWriter, Progress, RunOptions, RunOutcome};
pub use summary::{
    read_log, recompute, seed_dir, summarize, Aggregate, Comparison, SeedMetrics, SeedResult, SeedStatus, Summary,
    METRICS, SCHEMA_VERSION, STATUS_INSUFFICIENT, STATUS_OK, STATUS_PARTIAL,
};
