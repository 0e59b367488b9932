//! Report emission: one JSON document (machine-readable, schema under
//! `schemas/`) and one CSV table per run. For a fixed config and seed the
//! outputs are byte-identical across runs and worker counts, except for the
//! `wall_time_ms` field of the JSON document.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use twistlab::error::{Error, Result};
use twistlab::scalar::CmpCounter;

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub twistlab: &'static str,
    #[serde(rename = "twistlab-cli")]
    pub cli: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions {
            twistlab: "0.1.0",
            cli: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// A labelled result row. `claim-check` rows carry a pass/fail verdict for a
/// claim the run checks; `descriptive` rows only report a value.
#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub name: String,
    pub kind: ClaimKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum ClaimKind {
    #[serde(rename = "claim-check")]
    Check,
    #[serde(rename = "descriptive")]
    Descriptive,
}

impl Claim {
    pub fn check(name: impl Into<String>, passed: bool) -> Self {
        Claim {
            name: name.into(),
            kind: ClaimKind::Check,
            passed: Some(passed),
            value: None,
        }
    }

    pub fn check_value(name: impl Into<String>, passed: bool, value: f64) -> Self {
        Claim {
            name: name.into(),
            kind: ClaimKind::Check,
            passed: Some(passed),
            value: Some(value),
        }
    }

    pub fn describe(name: impl Into<String>, value: f64) -> Self {
        Claim {
            name: name.into(),
            kind: ClaimKind::Descriptive,
            passed: None,
            value: Some(value),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndetSummary {
    pub comparisons: u64,
    pub indeterminate: u64,
    pub fraction: f64,
}

impl From<&CmpCounter> for IndetSummary {
    fn from(c: &CmpCounter) -> Self {
        IndetSummary {
            comparisons: c.comparisons,
            indeterminate: c.indeterminate,
            fraction: c.indeterminate_fraction(),
        }
    }
}

/// The JSON envelope shared by every subcommand.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub versions: Versions,
    pub wall_time_ms: u64,
    pub outputs: Value,
    pub claims: Vec<Claim>,
    pub indeterminate: IndetSummary,
}

/// What a command handler produces before the envelope is assembled.
pub struct CommandOutput {
    pub config: Value,
    pub outputs: Value,
    pub claims: Vec<Claim>,
    pub csv_header: Vec<&'static str>,
    pub csv_rows: Vec<Vec<String>>,
    pub summary: String,
    pub counter: CmpCounter,
}

/// Write the JSON report and CSV table; returns the two paths.
pub fn emit_report(
    out_dir: &Path,
    command: &str,
    envelope: &Envelope,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir).map_err(|e| {
        Error::resource(format!(
            "cannot create output directory {}: {e}",
            out_dir.display()
        ))
    })?;
    let json_path = out_dir.join(format!("{command}.json"));
    let csv_path = out_dir.join(format!("{command}.csv"));

    let mut json = serde_json::to_string_pretty(envelope).expect("reports serialize");
    json.push('\n');
    std::fs::write(&json_path, json)
        .map_err(|e| Error::resource(format!("cannot write {}: {e}", json_path.display())))?;

    let mut csv = String::new();
    csv.push_str(&header.join(","));
    csv.push('\n');
    for row in rows {
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    std::fs::write(&csv_path, csv)
        .map_err(|e| Error::resource(format!("cannot write {}: {e}", csv_path.display())))?;

    Ok((json_path, csv_path))
}

/// CSV cell renderings.
pub fn cell_f64(x: f64) -> String {
    format!("{x}")
}

pub fn cell_opt_f64(x: Option<f64>) -> String {
    x.map(cell_f64).unwrap_or_default()
}

pub fn cell_ints(xs: &[i64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("|")
}

pub fn cell_usizes(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("|")
}
