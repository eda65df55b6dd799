//! Tabular experiment reports with CSV and JSON output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The data contradicts a stated closed form; both readings are kept.
    DiscrepancyLogged,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::DiscrepancyLogged => "discrepancy-logged",
        }
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub grid: String,
    pub n: f64,
    pub observed: f64,
    pub reference: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl ReportRow {
    pub fn new(grid: impl Into<String>, n: f64, observed: f64, reference: f64) -> Self {
        let abs_err = (observed - reference).abs();
        let rel_err = if reference == 0.0 {
            abs_err
        } else {
            abs_err / reference.abs()
        };
        Self {
            grid: grid.into(),
            n,
            observed,
            reference,
            abs_err,
            rel_err,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub fitted_order: Option<f64>,
    pub verdict: Verdict,
    pub metadata: BTreeMap<String, String>,
    /// One-line human summary.
    pub summary: String,
}

pub const CSV_HEADER: &str = "grid,n,observed,reference,abs_err,rel_err";

fn csv_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ExperimentReport {
    pub fn new(rows: Vec<ReportRow>, verdict: Verdict, summary: impl Into<String>) -> Self {
        Self {
            rows,
            fitted_order: None,
            verdict,
            metadata: BTreeMap::new(),
            summary: summary.into(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn with_fitted_order(mut self, order: Option<f64>) -> Self {
        self.fitted_order = order;
        self
    }

    /// Rows as CSV with 17 significant digits per float.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_field(&r.grid),
                csv_float(r.n),
                csv_float(r.observed),
                csv_float(r.reference),
                csv_float(r.abs_err),
                csv_float(r.rel_err)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `verdict: summary`
    pub fn verdict_line(&self) -> String {
        format!("{}: {}", self.verdict.as_str(), self.summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let report = ExperimentReport::new(
            vec![ReportRow::new("x=1", 10.0, 1.47, 1.47), ReportRow::new("a,b", 20.0, 0.1, 0.0)],
            Verdict::Pass,
            "ok",
        );
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("x=1,1.0000000000000000e1,1.4700000000000000e0,"));
        assert!(lines[2].starts_with("\"a,b\","));
        let back: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(back, 1.47);
    }

    #[test]
    fn json_round_trip() {
        let report = ExperimentReport::new(vec![ReportRow::new("g", 1.0, 2.0, 3.0)], Verdict::DiscrepancyLogged, "s")
            .with_meta("c", 0.5)
            .with_fitted_order(Some(-1.0));
        let back: ExperimentReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
        assert!(report.to_json().contains("discrepancy-logged"));
    }
}
