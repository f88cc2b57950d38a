//! Verification report: one record per executed check.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{RunConfig, Suite};
use crate::error::{Error, Result};
pub use crate::lusin::Status;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: Suite,
    pub id: String,
    /// The property being checked, in words.
    pub anchor: String,
    pub status: Status,
    /// Residual, slack or ratio, depending on the check.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl CheckRecord {
    pub fn new(suite: Suite, id: &str, anchor: &str) -> Self {
        CheckRecord {
            suite,
            id: id.to_string(),
            anchor: anchor.to_string(),
            status: Status::Inconclusive,
            value: None,
            tolerance: None,
            details: Value::Null,
        }
    }

    /// Passes iff `value <= tolerance`.
    pub fn at_most(mut self, value: f64, tolerance: f64) -> Self {
        self.status = if value <= tolerance { Status::Pass } else { Status::Fail };
        self.value = finite(value);
        self.tolerance = Some(tolerance);
        self
    }

    pub fn judged(mut self, pass: bool, value: f64) -> Self {
        self.status = if pass { Status::Pass } else { Status::Fail };
        self.value = finite(value);
        self
    }

    pub fn status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    /// Record for a check that errored or panicked.
    pub fn crashed(suite: Suite, id: &str, diagnostic: &str) -> Self {
        CheckRecord::new(suite, id, "check did not complete")
            .status(Status::Fail)
            .details(serde_json::json!({ "diagnostic": diagnostic }))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

/// Everything that varies between identical runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub unix_seconds: u64,
    /// Wall time per `suite/check` in milliseconds.
    pub runtime_ms: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tool: ToolInfo,
    pub config: RunConfig,
    pub summary: Summary,
    pub checks: Vec<CheckRecord>,
    pub timestamp: Timestamp,
}

pub const REPORT_FILE: &str = "report.json";

impl VerificationReport {
    pub fn new(config: &RunConfig) -> Self {
        VerificationReport {
            tool: ToolInfo::default(),
            config: config.clone(),
            summary: Summary::default(),
            checks: Vec::new(),
            timestamp: Timestamp::default(),
        }
    }

    pub fn push(&mut self, record: CheckRecord, runtime_ms: u64) {
        let key = format!("{}/{}", record.suite, record.id);
        self.summary.total += 1;
        match record.status {
            Status::Pass => self.summary.passed += 1,
            Status::Fail => self.summary.failed += 1,
            Status::Inconclusive => self.summary.inconclusive += 1,
        }
        self.timestamp.runtime_ms.insert(key, runtime_ms);
        self.checks.push(record);
    }

    pub fn failed(&self) -> bool {
        self.summary.failed > 0
    }

    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failed())
    }

    pub fn has_suite(&self, suite: Suite) -> bool {
        self.checks.iter().any(|c| c.suite == suite)
    }

    pub fn check(&self, suite: Suite, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.suite == suite && c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// The report with the timestamp block cleared, for byte comparisons.
    pub fn without_timestamp(&self) -> String {
        VerificationReport { timestamp: Timestamp::default(), ..self.clone() }.to_json()
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(REPORT_FILE);
        std::fs::write(&path, self.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_and_exit_code() {
        let mut r = VerificationReport::new(&RunConfig::default());
        assert_eq!(r.exit_code(), 0);
        r.push(CheckRecord::new(Suite::Kernels, "a", "x").at_most(1e-9, 1e-6), 3);
        r.push(CheckRecord::new(Suite::Kernels, "b", "y").status(Status::Inconclusive), 1);
        assert_eq!(r.exit_code(), 0);
        r.push(CheckRecord::new(Suite::Mc, "c", "z").at_most(1.0, 1e-6), 2);
        assert_eq!(r.summary, Summary { total: 3, passed: 1, failed: 1, inconclusive: 1 });
        assert_eq!(r.exit_code(), 1);
        assert!(r.has_suite(Suite::Mc) && !r.has_suite(Suite::Lusin));
        assert_eq!(r.check(Suite::Kernels, "a").unwrap().status, Status::Pass);
    }

    #[test]
    fn json_round_trip_and_nan() {
        let mut r = VerificationReport::new(&RunConfig::default());
        r.push(CheckRecord::new(Suite::Orlicz, "n", "nan value").judged(false, f64::NAN), 0);
        let text = r.to_json();
        assert!(text.contains("\"value\": null"));
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.checks[0].value, None);
        let mut other = r.clone();
        other.timestamp.unix_seconds = 99;
        assert_eq!(r.without_timestamp(), other.without_timestamp());
    }
}
