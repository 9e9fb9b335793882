//! CSV serialization of check and sweep reports: RFC-4180-style quoting, LF
//! line endings, floats in shortest round-trip decimal form, deterministic
//! row order. Every data row carries the config hash and the seed.

use crate::error::{Error, Result};
use crate::verify::{CheckReport, SweepReport};
use std::io::Write;
use std::path::Path;

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Writes header and rows; an empty row list yields a header-only file.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.iter().map(|h| escape(h)).collect::<Vec<_>>().join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.iter().map(|c| escape(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(out.as_bytes()).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub const CHECK_HEADER: [&str; 6] = ["name", "passed", "margin", "seed", "config_hash", "details"];

pub fn check_rows(reports: &[CheckReport], config_hash: &str, seed: u64) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            let details = r
                .details
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            vec![
                r.name.clone(),
                r.passed.to_string(),
                fmt_f64(r.margin),
                seed.to_string(),
                config_hash.to_string(),
                details,
            ]
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 9] = [
    "name",
    "param",
    "error",
    "secondary_error",
    "slope",
    "secondary_slope",
    "passed",
    "seed",
    "config_hash",
];

/// One row per sweep point plus a summary row carrying the fitted slopes and
/// the verdict.
pub fn sweep_rows(report: &SweepReport, config_hash: &str, seed: u64) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(report.params.len() + 1);
    for (i, &p) in report.params.iter().enumerate() {
        let secondary = report
            .secondary_errors
            .as_ref()
            .map(|s| fmt_f64(s[i]))
            .unwrap_or_default();
        rows.push(vec![
            report.name.clone(),
            fmt_f64(p),
            fmt_f64(report.errors[i]),
            secondary,
            String::new(),
            String::new(),
            String::new(),
            seed.to_string(),
            config_hash.to_string(),
        ]);
    }
    rows.push(vec![
        format!("{}_summary", report.name),
        String::new(),
        String::new(),
        String::new(),
        report.slope.map(fmt_f64).unwrap_or_default(),
        report.secondary_slope.map(fmt_f64).unwrap_or_default(),
        report.passed.to_string(),
        seed.to_string(),
        config_hash.to_string(),
    ]);
    rows
}
