//! Verification records and deterministic JSON/CSV emission.
//!
//! Reports carry no timestamps and serialise with fixed field order, so a
//! fixed seed reproduces byte-identical bodies. Files are written to a
//! temporary sibling and renamed into place.

use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o failure writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("serialisation failure: {0}")]
    Serde(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Diagnostic,
}

/// Coarse/fine residuals from a step-halving study.
#[derive(Debug, Clone, Serialize)]
pub struct Convergence {
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
}

impl Convergence {
    pub fn new(coarse: f64, fine: f64) -> Self {
        let ratio = if fine > 0.0 {
            coarse / fine
        } else {
            f64::INFINITY
        };
        Self {
            coarse,
            fine,
            ratio,
        }
    }
}

/// One verification record: what was checked, the measured value, the
/// tolerance it was held to and how it went. `reference` names the
/// identity the record verifies; `inputs_digest` fingerprints the inputs
/// that produced the value.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub name: String,
    pub reference: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Convergence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<String>,
    pub inputs_digest: String,
}

impl Record {
    /// Pass/fail record: passes when `value <= tolerance`.
    pub fn check(name: &str, reference: &str, value: f64, tolerance: f64, digest: &str) -> Self {
        Self {
            name: name.to_string(),
            reference: reference.to_string(),
            value,
            tolerance: Some(tolerance),
            outcome: if value.is_finite() && value <= tolerance {
                Outcome::Pass
            } else {
                Outcome::Fail
            },
            convergence: None,
            details: None,
            inputs_digest: digest.to_string(),
        }
    }

    /// Pass/fail record for a value required to sit inside a closed range.
    pub fn check_range(
        name: &str,
        reference: &str,
        value: f64,
        lo: f64,
        hi: f64,
        digest: &str,
    ) -> Self {
        Self {
            name: name.to_string(),
            reference: reference.to_string(),
            value,
            tolerance: None,
            outcome: if value.is_finite() && value >= lo && value <= hi {
                Outcome::Pass
            } else {
                Outcome::Fail
            },
            convergence: None,
            details: Some(format!("required range [{lo}, {hi}]")),
            inputs_digest: digest.to_string(),
        }
    }

    /// Diagnostic record: reported, never failing.
    pub fn diagnostic(name: &str, reference: &str, value: f64, digest: &str) -> Self {
        Self {
            name: name.to_string(),
            reference: reference.to_string(),
            value,
            tolerance: None,
            outcome: Outcome::Diagnostic,
            convergence: None,
            details: None,
            inputs_digest: digest.to_string(),
        }
    }

    pub fn with_convergence(mut self, c: Convergence) -> Self {
        self.convergence = Some(c);
        self
    }

    pub fn with_details(mut self, details: String) -> Self {
        self.details = Some(details);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub diagnostic: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub tol_scale: f64,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: &str, seed: u64, tol_scale: f64, records: Vec<Record>) -> Self {
        let summary = Summary {
            pass: records.iter().filter(|r| r.outcome == Outcome::Pass).count(),
            fail: records.iter().filter(|r| r.outcome == Outcome::Fail).count(),
            diagnostic: records
                .iter()
                .filter(|r| r.outcome == Outcome::Diagnostic)
                .count(),
        };
        Self {
            command: command.to_string(),
            seed,
            tol_scale,
            records,
            summary,
        }
    }

    pub fn has_failures(&self) -> bool {
        self.summary.fail > 0
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain pass/fail table for the terminal.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let name_w = self
            .records
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(8)
            .max(8);
        for r in &self.records {
            let outcome = match r.outcome {
                Outcome::Pass => "PASS",
                Outcome::Fail => "FAIL",
                Outcome::Diagnostic => "INFO",
            };
            let tol = r
                .tolerance
                .map(|t| format!(" (tol {t:.2e})"))
                .unwrap_or_default();
            let conv = r
                .convergence
                .as_ref()
                .map(|c| format!(" [ratio {:.2}]", c.ratio))
                .unwrap_or_default();
            writeln!(
                out,
                "{outcome}  {:<name_w$}  {:>12.5e}{tol}{conv}  {}",
                r.name, r.value, r.reference
            )
            .expect("string write");
        }
        writeln!(
            out,
            "summary: {} pass, {} fail, {} diagnostic",
            self.summary.pass, self.summary.fail, self.summary.diagnostic
        )
        .expect("string write");
        out
    }
}

/// Writes `content` atomically (temp file + rename).
pub fn write_atomic(path: &Path, content: &str) -> Result<(), ReportError> {
    let err = |source: std::io::Error| ReportError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(err)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content).map_err(|source| ReportError::Io {
        path: tmp.display().to_string(),
        source,
    })?;
    std::fs::rename(&tmp, path).map_err(err)?;
    Ok(())
}

/// FNV-1a fingerprint of the inputs behind a record; stable across runs
/// and platforms.
pub fn digest(parts: &[&str]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for part in parts {
        for b in part.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0x1f;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_outcomes() {
        let r = Record::check("a", "id", 1e-9, 1e-6, "d");
        assert_eq!(r.outcome, Outcome::Pass);
        let r = Record::check("a", "id", 1e-3, 1e-6, "d");
        assert_eq!(r.outcome, Outcome::Fail);
        let r = Record::check("a", "id", f64::NAN, 1e-6, "d");
        assert_eq!(r.outcome, Outcome::Fail);
        let r = Record::check_range("a", "id", 4.0, 3.5, 4.5, "d");
        assert_eq!(r.outcome, Outcome::Pass);
    }

    #[test]
    fn summary_counts_match() {
        let records = vec![
            Record::check("a", "x", 0.0, 1.0, "d"),
            Record::check("b", "x", 2.0, 1.0, "d"),
            Record::diagnostic("c", "x", 5.0, "d"),
        ];
        let rep = Report::new("test", 1, 1.0, records);
        assert_eq!(rep.summary.pass, 1);
        assert_eq!(rep.summary.fail, 1);
        assert_eq!(rep.summary.diagnostic, 1);
        assert!(rep.has_failures());
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(digest(&["a", "b"]), digest(&["a", "b"]));
        assert_ne!(digest(&["a", "b"]), digest(&["ab"]));
    }

    #[test]
    fn json_is_deterministic() {
        let records = vec![Record::check("a", "x", 1.25e-7, 1e-6, "d")];
        let r1 = Report::new("t", 9, 1.0, records.clone());
        let r2 = Report::new("t", 9, 1.0, records);
        assert_eq!(r1.to_json().unwrap(), r2.to_json().unwrap());
    }
}
