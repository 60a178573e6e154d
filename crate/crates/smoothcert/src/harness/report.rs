//! Certification reports: per-example rows, the CSV wire format, the
//! certified-accuracy curve, and report comparison.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::core::{CertifyOutcome, Norm};
use crate::error::{Error, Result};

/// Status column values.
pub const STATUS_CERTIFIED: &str = "CERTIFIED";
pub const STATUS_ABSTAIN: &str = "ABSTAIN";

/// CSV header, fixed order.
pub const REPORT_HEADER: &str =
    "example_id,true_label,status,certified_label,radius,pa_lower,wall_time_s";

/// One certified (or abstained) test example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub example_id: u64,
    pub true_label: usize,
    pub certified: bool,
    pub certified_label: Option<usize>,
    pub radius: Option<f64>,
    pub pa_lower: Option<f64>,
    pub wall_time_s: Option<f64>,
}

impl ReportRow {
    pub fn from_outcome(
        example_id: u64,
        true_label: usize,
        outcome: &CertifyOutcome,
        wall_time_s: Option<f64>,
    ) -> Self {
        match outcome {
            CertifyOutcome::Certified(cert) => ReportRow {
                example_id,
                true_label,
                certified: true,
                certified_label: Some(cert.label.index()),
                radius: Some(cert.radius),
                pa_lower: Some(cert.pa_lower),
                wall_time_s,
            },
            CertifyOutcome::Abstain => ReportRow {
                example_id,
                true_label,
                certified: false,
                certified_label: None,
                radius: None,
                pa_lower: None,
                wall_time_s,
            },
        }
    }

    fn is_certified_correct(&self) -> bool {
        self.certified && self.certified_label == Some(self.true_label)
    }
}

/// A full certification run: one row per test example plus the config
/// snapshot it was produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub rows: Vec<ReportRow>,
    pub config: serde_json::Value,
    pub seed: u64,
    /// Norm the radii are measured in.
    pub norm: Option<Norm>,
}

impl CertificationReport {
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::EmptyReport);
        }
        for row in &self.rows {
            if row.certified {
                let ok = row.certified_label.is_some()
                    && row.radius.is_some_and(|r| r >= 0.0)
                    && row.pa_lower.is_some_and(|p| p > 0.5);
                if !ok {
                    return Err(Error::Format(format!(
                        "certified row {} is missing its certificate fields",
                        row.example_id
                    )));
                }
            }
        }
        Ok(())
    }
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Emits the CSV form: mandatory header, one row per example, empty fields
/// for absent values. Floats print in shortest round-trip form, so a parse
/// reproduces the report field-for-field.
pub fn emit_csv(report: &CertificationReport) -> String {
    let mut out = String::with_capacity(64 * (report.rows.len() + 1));
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for row in &report.rows {
        let status = if row.certified {
            STATUS_CERTIFIED
        } else {
            STATUS_ABSTAIN
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.example_id,
            row.true_label,
            status,
            fmt_opt_usize(row.certified_label),
            fmt_opt_f64(row.radius),
            fmt_opt_f64(row.pa_lower),
            fmt_opt_f64(row.wall_time_s),
        ));
    }
    out
}

pub fn write_csv(report: &CertificationReport, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, emit_csv(report))?;
    Ok(())
}

fn parse_opt_f64(field: &str, line: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| Error::Format(format!("line {line}: bad float {field:?}: {e}")))
}

/// Parses the CSV form back into rows.
pub fn parse_csv(raw: &str) -> Result<Vec<ReportRow>> {
    let mut lines = raw.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == REPORT_HEADER => {}
        _ => {
            return Err(Error::Format(format!(
                "report must start with the header {REPORT_HEADER:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Format(format!(
                "line {lineno}: expected 7 fields, found {}",
                fields.len()
            )));
        }
        let certified = match fields[2] {
            STATUS_CERTIFIED => true,
            STATUS_ABSTAIN => false,
            other => {
                return Err(Error::Format(format!(
                    "line {lineno}: unknown status {other:?}"
                )))
            }
        };
        rows.push(ReportRow {
            example_id: fields[0]
                .parse()
                .map_err(|e| Error::Format(format!("line {lineno}: bad id: {e}")))?,
            true_label: fields[1]
                .parse()
                .map_err(|e| Error::Format(format!("line {lineno}: bad label: {e}")))?,
            certified,
            certified_label: if fields[3].is_empty() {
                None
            } else {
                Some(fields[3].parse().map_err(|e| {
                    Error::Format(format!("line {lineno}: bad certified label: {e}"))
                })?)
            },
            radius: parse_opt_f64(fields[4], lineno)?,
            pa_lower: parse_opt_f64(fields[5], lineno)?,
            wall_time_s: parse_opt_f64(fields[6], lineno)?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// The default radius grid: 0.0 to 4.0 in steps of 0.25.
pub fn default_radius_grid() -> Vec<f64> {
    (0..=16).map(|i| i as f64 * 0.25).collect()
}

/// Certified accuracy at each grid radius: the fraction of examples
/// certified correct with radius at least R. Non-increasing in R.
pub fn certified_accuracy(
    report: &CertificationReport,
    radius_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if report.rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let n = report.rows.len() as f64;
    Ok(radius_grid
        .iter()
        .map(|&r| {
            let hits = report
                .rows
                .iter()
                .filter(|row| row.is_certified_correct() && row.radius.unwrap_or(0.0) >= r)
                .count();
            (r, hits as f64 / n)
        })
        .collect())
}

/// One grid point of a report comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyDelta {
    pub radius: f64,
    pub baseline: f64,
    pub candidate: f64,
    pub delta: f64,
}

/// Per-radius accuracy deltas between two reports over the same test set.
pub fn compare_reports(
    baseline: &CertificationReport,
    candidate: &CertificationReport,
    radius_grid: &[f64],
) -> Result<Vec<AccuracyDelta>> {
    if baseline.rows.len() != candidate.rows.len() {
        return Err(Error::MismatchedTestSets(format!(
            "row counts differ: {} vs {}",
            baseline.rows.len(),
            candidate.rows.len()
        )));
    }
    for (a, b) in baseline.rows.iter().zip(candidate.rows.iter()) {
        if a.example_id != b.example_id || a.true_label != b.true_label {
            return Err(Error::MismatchedTestSets(format!(
                "example {} differs between reports",
                a.example_id
            )));
        }
    }
    let base = certified_accuracy(baseline, radius_grid)?;
    let cand = certified_accuracy(candidate, radius_grid)?;
    Ok(base
        .iter()
        .zip(cand.iter())
        .map(|(&(r, b), &(_, c))| AccuracyDelta {
            radius: r,
            baseline: b,
            candidate: c,
            delta: c - b,
        })
        .collect())
}

/// Emits an accuracy curve as CSV (`radius,accuracy`).
pub fn emit_curve_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("radius,accuracy\n");
    for (r, a) in curve {
        out.push_str(&format!("{r},{a}\n"));
    }
    out
}

/// Emits a comparison table as CSV.
pub fn emit_compare_csv(deltas: &[AccuracyDelta]) -> String {
    let mut out = String::from("radius,acc_baseline,acc_candidate,delta\n");
    for d in deltas {
        out.push_str(&format!(
            "{},{},{},{}\n",
            d.radius, d.baseline, d.candidate, d.delta
        ));
    }
    out
}
