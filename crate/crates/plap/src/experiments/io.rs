//! File formats: CSV readers/writers for clouds, labels, solutions, and
//! kernel tables, plus the JSON solve report. All text is UTF-8 with LF line
//! endings and `%.17g` numeric formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::geometry::{GeometryError, LabelSet, PointCloud};

use super::CliError;

/// C's `%.17g`: 17 significant digits, fixed notation for exponents in
/// `[-4, 17)`, scientific otherwise, trailing zeros stripped. Guarantees
/// bit-exact round-trips for f64.
pub fn g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp_str) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp_str.parse().expect("numeric exponent");
    if (-4..17).contains(&exp) {
        let prec = (16 - exp).max(0) as usize;
        let fixed = format!("{:.*}", prec, x);
        strip_fraction_zeros(&fixed).to_string()
    } else {
        let mantissa = strip_fraction_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn strip_fraction_zeros(s: &str) -> &str {
    if !s.contains('.') {
        return s;
    }
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s)
}

fn read_error(path: &Path, detail: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {detail}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| read_error(path, e))
}

/// Point-cloud CSV: header `id,x0,...,x{d-1}`, ids `0..n-1` contiguous.
pub fn write_cloud_csv(path: &Path, cloud: &PointCloud) -> Result<(), CliError> {
    let d = cloud.dim();
    let mut text = String::from("id");
    for k in 0..d {
        let _ = write!(text, ",x{k}");
    }
    text.push('\n');
    for i in 0..cloud.n() {
        let _ = write!(text, "{i}");
        for c in cloud.point(i) {
            let _ = write!(text, ",{}", g17(*c));
        }
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn read_cloud_csv(path: &Path) -> Result<PointCloud, CliError> {
    let text = fs::read_to_string(path).map_err(|e| read_error(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| read_error(path, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"id") || cols.len() < 2 {
        return Err(read_error(path, "expected header id,x0,..."));
    }
    for (k, c) in cols[1..].iter().enumerate() {
        if *c != format!("x{k}") {
            return Err(read_error(path, format!("unexpected column {c}")));
        }
    }
    let d = cols.len() - 1;
    let mut coords = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(read_error(path, format!("row {}: wrong field count", lineno + 2)));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| read_error(path, format!("row {}: bad id", lineno + 2)))?;
        if id != coords.len() / d {
            return Err(read_error(path, format!("row {}: ids must be contiguous", lineno + 2)));
        }
        for f in &fields[1..] {
            let v: f64 = f
                .parse()
                .map_err(|_| read_error(path, format!("row {}: bad number {f}", lineno + 2)))?;
            coords.push(v);
        }
    }
    PointCloud::from_coords(d, coords, 0).map_err(|e| read_error(path, e))
}

/// Label CSV: header `id,value`.
pub fn write_labels_csv(path: &Path, labels: &LabelSet) -> Result<(), CliError> {
    let mut text = String::from("id,value\n");
    for &(i, y) in labels.iter() {
        let _ = writeln!(text, "{i},{}", g17(y));
    }
    write_text(path, &text)
}

pub fn read_labels_csv(path: &Path, n_total: usize) -> Result<LabelSet, CliError> {
    let text = fs::read_to_string(path).map_err(|e| read_error(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("id,value") => {}
        _ => return Err(read_error(path, "expected header id,value")),
    }
    let mut entries = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, value) = line
            .split_once(',')
            .ok_or_else(|| read_error(path, format!("row {}: expected id,value", lineno + 2)))?;
        let id: usize = id
            .parse()
            .map_err(|_| read_error(path, format!("row {}: bad id", lineno + 2)))?;
        let value: f64 = value
            .parse()
            .map_err(|_| read_error(path, format!("row {}: bad value", lineno + 2)))?;
        entries.push((id, value));
    }
    LabelSet::new(entries, n_total)
        .map_err(|e: GeometryError| read_error(path, e))
}

/// Solution CSV: header `id,value`, one row per node.
pub fn write_solution_csv(path: &Path, values: &[f64]) -> Result<(), CliError> {
    let mut text = String::from("id,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(text, "{i},{}", g17(*v));
    }
    write_text(path, &text)
}

/// Kernel table CSV: header `s,eta`.
pub fn read_kernel_table(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| read_error(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("s,eta") => {}
        _ => return Err(read_error(path, "expected header s,eta")),
    }
    let mut samples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let (s, eta) = line
            .split_once(',')
            .ok_or_else(|| read_error(path, format!("row {}: expected s,eta", lineno + 2)))?;
        let s: f64 = s
            .parse()
            .map_err(|_| read_error(path, format!("row {}: bad abscissa", lineno + 2)))?;
        let eta: f64 = eta
            .parse()
            .map_err(|_| read_error(path, format!("row {}: bad value", lineno + 2)))?;
        samples.push((s, eta));
    }
    Ok(samples)
}

/// The per-solve JSON report.
#[derive(Debug, serde::Serialize)]
pub struct RunReport {
    pub iterations: usize,
    pub final_update: f64,
    pub converged: bool,
    pub wall_seconds: f64,
    pub scheme: String,
    pub p: Option<f64>,
    pub epsilon: f64,
    pub k: Option<f64>,
    pub n: usize,
    pub seed: u64,
}

pub fn write_report_json(path: &Path, report: &RunReport) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}
