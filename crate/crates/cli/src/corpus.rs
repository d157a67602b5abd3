//! Runs example programs under both encodings and, where the path bound
//! allows, against the enumeration oracle.

use std::path::Path;
use std::time::{Duration, Instant};

use probbits::lang::{parse, run_program, Answer, Encoding};
use probbits::oracle::{enumerate_with_cap, path_bound};
use serde::Serialize;

use crate::{with_timeout, CliError, Result};

pub const TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Entry {
    pub name: String,
    /// Program text, or why it could not be read.
    pub source: std::result::Result<String, String>,
}

pub fn embedded() -> Vec<Entry> {
    probbits::corpus::EXAMPLES
        .iter()
        .map(|e| Entry {
            name: e.name.to_string(),
            source: Ok(e.source.to_string()),
        })
        .collect()
}

/// Every `*.pb` file of `dir`, sorted by name. Unreadable files become
/// entries that fail on their own.
pub fn from_dir(dir: &Path) -> Result<Vec<Entry>> {
    let io = |source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pb"))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| Entry {
            name: p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            source: std::fs::read_to_string(&p).map_err(|e| e.to_string()),
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub name: String,
    pub passed: bool,
    /// Whether the oracle ran; it is skipped when the path bound exceeds
    /// the cap.
    pub oracle_checked: bool,
    pub path_bound: Option<f64>,
    /// Engine against oracle.
    pub max_abs_diff: Option<f64>,
    /// Bitwise against categorical encoding.
    pub encoding_diff: Option<f64>,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn diff(a: &[Answer], b: &[Answer]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    a.iter()
        .zip(b)
        .try_fold(0.0f64, |m, (x, y)| Some(m.max(x.max_abs_diff(y)?)))
}

fn check_source(name: &str, source: &str, cap: u64) -> Outcome {
    let mut out = Outcome {
        name: name.to_string(),
        passed: false,
        oracle_checked: false,
        path_bound: None,
        max_abs_diff: None,
        encoding_diff: None,
        elapsed_ms: 0.0,
        error: None,
    };
    let program = match parse(source) {
        Ok(p) => p,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    let bitwise = run_program(source, Encoding::Bitwise);
    let categ = run_program(source, Encoding::Categ);
    let (bitwise, categ) = match (bitwise, categ) {
        (Ok(b), Ok(c)) => (b, c),
        (Err(e), _) | (_, Err(e)) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.encoding_diff = diff(&bitwise.answers, &categ.answers);
    let bound = path_bound(&program);
    out.path_bound = Some(bound);
    if bound <= cap as f64 {
        match enumerate_with_cap(&program, cap) {
            Ok(o) => {
                out.oracle_checked = true;
                out.max_abs_diff = diff(&bitwise.answers, &o.answers)
                    .map(|d| d.max((bitwise.evidence_probability - o.evidence_probability).abs()));
            }
            Err(e) => out.error = Some(format!("oracle: {e}")),
        }
    }
    let within = |d: Option<f64>| d.is_some_and(|d| d <= TOLERANCE);
    out.passed = out.error.is_none()
        && within(out.encoding_diff)
        && (!out.oracle_checked || within(out.max_abs_diff));
    if out.error.is_none() && !out.passed {
        out.error = Some("results differ beyond tolerance".into());
    }
    out
}

pub fn check(entry: &Entry, cap: u64, timeout: Option<Duration>) -> Outcome {
    let start = Instant::now();
    let name = entry.name.clone();
    let mut out = match &entry.source {
        Err(e) => Outcome {
            name: name.clone(),
            passed: false,
            oracle_checked: false,
            path_bound: None,
            max_abs_diff: None,
            encoding_diff: None,
            elapsed_ms: 0.0,
            error: Some(format!("unreadable: {e}")),
        },
        Ok(source) => {
            let (n, s) = (name.clone(), source.clone());
            with_timeout(timeout, move || check_source(&n, &s, cap)).unwrap_or_else(|| Outcome {
                name,
                passed: false,
                oracle_checked: false,
                path_bound: None,
                max_abs_diff: None,
                encoding_diff: None,
                elapsed_ms: 0.0,
                error: Some(CliError::Timeout(timeout.unwrap_or_default().as_secs()).to_string()),
            })
        }
    };
    out.elapsed_ms = (start.elapsed().as_secs_f64() * 1e6).round() / 1e3;
    out
}
