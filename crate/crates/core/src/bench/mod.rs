//! Experiment harness: configuration, request protocols, the sequential
//! unlearning and bound-validation runs, and report emission.

mod config;
mod experiment;
mod report;

pub use config::{parse_override_args, ExperimentConfig, ProtocolKind, RemovalProtocol, ScatteringParams};
pub use experiment::{
    load_or_generate, plan_requests, retrain_counts, run_bound_validation, run_request_stream,
    run_unlearning_experiment, train_model, StreamResult, DOMINANCE_SLACK,
};
pub use report::{emit_report, ArmSummary, ReportFormat, RunReport, SeedResult, Stat, StepRecord, StepStat};
