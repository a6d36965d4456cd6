//! Experiment orchestration: configs, tuning-grid runs, dataset simulation
//! and posterior summaries.

pub mod config;
pub mod experiment;
pub mod summary;

pub use config::{AcdConfig, ChainConfig, ExperimentConfig, ModelConfig, SamplerConfig, SamplerKind, SimulateConfig};
pub use experiment::{
    acd_for_trace, default_prior, run_experiment, simulate_dataset, summary_csv, Dataset, EntrySummary,
    ExperimentOutcome, RunOptions, RunStatus,
};
pub use summary::{kde_2d, posterior_summary, summarize_trace, CoordinateSummary, DensityGrid, PosteriorSummary};
