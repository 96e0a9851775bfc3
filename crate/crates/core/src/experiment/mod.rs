//! Experiment harness: configs, sampling methods and result tables.

pub mod config;
pub mod methods;
pub mod run;

pub use config::{Auto, ConfigBuilder, DatasetSpec, ExperimentConfig, Method};
pub use methods::{build_rff_kernel, run_method, run_pipeline_mdpp, CellSpec, MethodContext};
pub use run::{load_dataset, resolve_bandwidth, run_experiment, ResultRow, CSV_HEADER};
