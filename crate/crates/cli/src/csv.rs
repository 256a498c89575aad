//! Headerless numeric CSV: one matrix row per line, comma-separated.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

/// Parses a matrix. Blank lines are skipped; every other line must have the
/// same number of fields as the first.
pub fn parse_matrix(text: &str) -> Result<Array2<f64>, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let row = t
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .map_err(|_| format!("line {line_no}: '{f}' is not a number"))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(format!("line {line_no}: expected {w} fields, found {}", row.len()));
            }
            Some(_) => {}
        }
        rows.push(row);
    }
    let w = width.ok_or("matrix file is empty")?;
    let h = rows.len();
    Array2::from_shape_vec((h, w), rows.into_iter().flatten().collect()).map_err(|e| e.to_string())
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_matrix(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_matrix(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<(), String> {
    std::fs::write(path, format_matrix(m)).map_err(|e| format!("{}: {e}", path.display()))
}
