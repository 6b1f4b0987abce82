//! Experiment orchestration: configuration, seeding, the results store,
//! the staged run pipeline, and table rendering.

pub mod config;
pub mod run;
pub mod seeds;
pub mod store;
pub mod tables;

pub use config::{default_t_c, default_t_sim, ExperimentConfig, Stage, OUTPUT_DIR_ENV};
pub use run::{analyze, read_series_csv, run_pipeline, write_series_csv};
pub use seeds::derive_seed;
pub use store::{Record, ResultsStore, STORE_FILE};
pub use tables::{emit_tables, format_with_error};
