//! CSV tables for external plotting, derived from a report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;

use super::config::Suite;
use super::report::VerificationReport;
use crate::error::{Error, Result};
use crate::kernels::kernel_table;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    KernelCurves,
    RatioTables,
    LusinMass,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::KernelCurves, PlotKind::RatioTables, PlotKind::LusinMass];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::KernelCurves => "kernel-curves",
            PlotKind::RatioTables => "ratio-tables",
            PlotKind::LusinMass => "lusin-mass",
        }
    }

    pub fn suite(self) -> Suite {
        match self {
            PlotKind::KernelCurves => Suite::Kernels,
            PlotKind::RatioTables => Suite::Meyer,
            PlotKind::LusinMass => Suite::Lusin,
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown plot kind `{s}`")))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn rows<'a>(report: &'a VerificationReport, suite: Suite, id: &str) -> impl Iterator<Item = &'a Value> {
    report
        .check(suite, id)
        .and_then(|c| c.details.get("rows"))
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
}

fn table(header: &[&str], lead: Option<&str>, rows: impl Iterator<Item = Value>) -> String {
    let mut out = String::new();
    let mut cols: Vec<&str> = lead.map(|_| "kind").into_iter().collect();
    cols.extend(header);
    writeln!(out, "{}", cols.join(",")).unwrap();
    for r in rows {
        let line: Vec<String> = cols.iter().map(|c| cell(r.get(*c).unwrap_or(&Value::Null))).collect();
        writeln!(out, "{}", line.join(",")).unwrap();
    }
    out
}

/// The CSV text for one plot kind.
pub fn plot_csv(report: &VerificationReport, kind: PlotKind) -> Result<String> {
    if !report.has_suite(kind.suite()) {
        return Err(Error::Config(format!("report has no `{}` suite, needed for {}", kind.suite(), kind.name())));
    }
    Ok(match kind {
        PlotKind::KernelCurves => {
            let mut out = String::from("s,u,q\n");
            for (s, u, q) in kernel_table() {
                writeln!(out, "{s},{u},{q}").unwrap();
            }
            out
        }
        PlotKind::RatioTables => {
            let tagged = ["forward-ratios", "reverse-ratios", "poincare-ratios"].into_iter().flat_map(|id| {
                rows(report, Suite::Meyer, id).map(move |r| {
                    let mut r = r.clone();
                    r["kind"] = Value::String(id.trim_end_matches("-ratios").into());
                    r
                })
            });
            table(&["function", "convention", "alpha", "ratio", "refined"], Some("kind"), tagged)
        }
        PlotKind::LusinMass => table(
            &["epsilon", "lambda_used", "complement_mass", "stderr", "anchors", "removed"],
            None,
            rows(report, Suite::Lusin, "lusin-approximation").cloned(),
        ),
    })
}

/// Writes `<kind>.csv` into `dir`.
pub fn write_plot_data(report: &VerificationReport, kind: PlotKind, dir: &Path) -> Result<PathBuf> {
    let text = plot_csv(report, kind)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(e.to_string()))?;
    let path = dir.join(format!("{}.csv", kind.name()));
    std::fs::write(&path, text).map_err(|e| Error::Io(e.to_string()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::RunConfig;
    use crate::harness::report::CheckRecord;
    use serde_json::json;

    fn report_with(suite: Suite, id: &str, details: Value) -> VerificationReport {
        let mut r = VerificationReport::new(&RunConfig::default());
        r.push(CheckRecord::new(suite, id, "x").judged(true, 0.0).details(details), 0);
        r
    }

    #[test]
    fn missing_suite_is_an_error() {
        let r = VerificationReport::new(&RunConfig::default());
        assert!(plot_csv(&r, PlotKind::KernelCurves).is_err());
    }

    #[test]
    fn empty_family_gives_header_only() {
        let r = report_with(Suite::Lusin, "lusin-approximation", json!({ "rows": [] }));
        let csv = plot_csv(&r, PlotKind::LusinMass).unwrap();
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn ratio_rows_are_tagged() {
        let r = report_with(
            Suite::Meyer,
            "forward-ratios",
            json!({ "rows": [{ "function": "standard-0", "convention": "standard", "alpha": 0.0, "ratio": 1.5, "refined": 1.5 }] }),
        );
        let csv = plot_csv(&r, PlotKind::RatioTables).unwrap();
        assert_eq!(csv.lines().nth(1).unwrap(), "forward,standard-0,standard,0.0,1.5,1.5");
    }

    #[test]
    fn kernel_curves_have_rows() {
        let r = report_with(Suite::Kernels, "q-total-integral", Value::Null);
        assert!(plot_csv(&r, PlotKind::KernelCurves).unwrap().lines().count() > 10);
        assert_eq!("lusin-mass".parse::<PlotKind>().unwrap(), PlotKind::LusinMass);
    }
}
