//! Configuration, orchestration and reporting on top of the filters.

pub mod config;
pub mod correct;
pub mod estimator;
pub mod report;

pub use config::{BiasSign, PipelineConfig, SimulationConfig};
pub use correct::{correct_log, correct_sample, CorrectStats};
pub use estimator::{run_pipeline, Estimator, EstimatorStats};
pub use report::{summarize, ReportOptions, Summary};
