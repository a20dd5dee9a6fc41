//! Monte Carlo experiments: configuration files, replicated runs and reports.

mod config;
mod experiments;
mod path_csv;
mod report;

pub use config::{load_config, parse_config, save_config, ExperimentConfig, ExperimentKind};
pub use experiments::{
    evaluate, replicate, replication_seed, run_clt, run_consistency, run_ergodic, run_experiment,
    run_f_variance, scheme_for, LOW_POWER_REPS,
};
pub use path_csv::{path_from_csv, path_to_csv, read_path_csv, write_path_csv};
pub use report::{write_report, ExperimentReport, Record, TSummary, Verdict};
