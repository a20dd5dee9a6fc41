use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FouError, Result};
use crate::estimators::EstimatorKind;
use crate::fou::FouParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Ergodic,
    Consistency,
    Clt,
    FVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub params: FouParams,
    pub t_values: Vec<f64>,
    pub delta: f64,
    pub n_reps: usize,
    pub master_seed: u64,
    pub estimator: EstimatorKind,
    /// Directory for the report when none is given on the command line.
    pub output_path: String,
}

impl ExperimentConfig {
    /// Structural checks; the message names the offending field.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.n_reps < 2 {
            return Err(format!("n_reps must be at least 2, got {}", self.n_reps));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(format!("delta must be positive, got {}", self.delta));
        }
        if self.t_values.is_empty() {
            return Err("t_values must not be empty".into());
        }
        if let Some(t) = self.t_values.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(format!("t_values must be positive, got {t}"));
        }
        if self.t_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err("t_values must be strictly increasing".into());
        }
        if let Some(t) = self.t_values.iter().find(|t| **t < self.delta) {
            return Err(format!("t_values entry {t} is shorter than delta {}", self.delta));
        }
        Ok(())
    }
}

fn config_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> FouError {
    FouError::Config {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Parses and validates a config; `path` is only used in error messages.
pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| config_error(path, e.line(), e.column(), e.to_string()))?;
    config.validate().map_err(|m| config_error(path, 0, 0, m))?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| FouError::io(path, e))?;
    parse_config(&text, path)
}

pub fn save_config(config: &ExperimentConfig, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(config).expect("config serializes");
    fs::write(path, text + "\n").map_err(|e| FouError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"{
  "kind": "clt",
  "params": {"theta": 1.0, "sigma": 1.0, "h": 0.6},
  "t_values": [100.0, 400.0],
  "delta": 0.01,
  "n_reps": 50,
  "master_seed": 7,
  "estimator": "hat-oracle",
  "output_path": "out"
}"#;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config(text, Path::new("cfg.json"))
    }

    #[test]
    fn parses_valid_config() {
        let c = parse(VALID).unwrap();
        assert_eq!(c.kind, ExperimentKind::Clt);
        assert_eq!(c.estimator, EstimatorKind::ThetaHatOracle);
        assert_eq!(c.params.h.value(), 0.6);
        assert_eq!(c.t_values, vec![100.0, 400.0]);
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let c = parse(VALID).unwrap();
        save_config(&c, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_named() {
        let bad = VALID.replace("\"theta\"", "\"thetaa\"");
        let err = parse(&bad).unwrap_err();
        match &err {
            FouError::Config { line, message, .. } => {
                assert!(message.contains("thetaa"), "{message}");
                assert_eq!(*line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        let top = VALID.replace("\"delta\"", "\"deltaa\"");
        assert!(parse(&top).unwrap_err().to_string().contains("deltaa"));
    }

    #[test]
    fn invariants_are_enforced() {
        for (from, to) in [
            ("\"n_reps\": 50", "\"n_reps\": 1"),
            ("\"delta\": 0.01", "\"delta\": 0.0"),
            ("[100.0, 400.0]", "[]"),
            ("[100.0, 400.0]", "[400.0, 100.0]"),
            ("[100.0, 400.0]", "[100.0, 100.0]"),
            ("\"h\": 0.6", "\"h\": 1.2"),
            ("\"theta\": 1.0", "\"theta\": -1.0"),
            ("\"clt\"", "\"bogus\""),
            ("\"hat-oracle\"", "\"hat\""),
        ] {
            let text = VALID.replace(from, to);
            assert!(matches!(parse(&text), Err(FouError::Config { .. })), "{to}");
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_config(Path::new("/nonexistent/c.json")), Err(FouError::Io { .. })));
    }
}
