use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::asymptotics::ConstantsTable;
use crate::error::{FouError, Result};

/// One replication: the recorded value is the experiment's per-path
/// statistic (time-averaged square, estimate, scaled error or F_T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub rep: usize,
    pub seed: u64,
    #[serde(rename = "T")]
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSummary {
    #[serde(rename = "T")]
    pub t: f64,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub mean_abs_error: Option<f64>,
    pub second_moment: Option<f64>,
    pub second_moment_std_error: Option<f64>,
    pub ks_statistic: Option<f64>,
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub passed: bool,
    pub observed: f64,
    pub target: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub constants: ConstantsTable,
    /// True when `n_reps` is too small for the verdicts to mean anything;
    /// no verdicts are issued then.
    pub low_power: bool,
    pub summaries: Vec<TSummary>,
    pub verdicts: Vec<Verdict>,
    pub records: Vec<Record>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn records_csv(&self) -> String {
        let mut out = String::from("rep,seed,T,value\n");
        for r in &self.records {
            writeln!(out, "{},{},{:.16e},{:.16e}", r.rep, r.seed, r.t, r.value).expect("write to string");
        }
        out
    }
}

/// Writes `report.json` and `records.csv` into `dir`, creating it if needed.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| FouError::io(dir, e))?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    let json_path = dir.join("report.json");
    fs::write(&json_path, json + "\n").map_err(|e| FouError::io(&json_path, e))?;
    let csv_path = dir.join("records.csv");
    fs::write(&csv_path, report.records_csv()).map_err(|e| FouError::io(&csv_path, e))
}
