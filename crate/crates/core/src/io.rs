//! Plain-text file formats.
//!
//! * Matrix: a `rows cols` header, then one line of space-separated values
//!   per row, written with 17 significant digits so a round trip is exact.
//! * Mask: a `rows cols` header, then one `i j` line (0-based) per observed entry.
//! * Test entries: `i j value` lines (0-based), used for held-out RMSE.
//! * Trace: CSV with columns `iter,residual,objective,alpha,d` and an
//!   optional trailing `ratio` column.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::IterRecord;
use crate::data::Rating;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::measure::ObservationMask;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Non-empty lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_header<'a>(
    path: &Path,
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<(usize, usize)> {
    let (lineno, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing \"rows cols\" header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parsed: Option<Vec<usize>> = dims.iter().map(|d| d.parse().ok()).collect();
    match parsed.as_deref() {
        Some(&[r, c]) if r > 0 && c > 0 => Ok((r, c)),
        Some(&[r, c]) => Err(Error::parse(
            path,
            lineno,
            format!("degenerate shape {r}x{c}"),
        )),
        _ => Err(Error::parse(
            path,
            lineno,
            format!("expected \"rows cols\", found {header:?}"),
        )),
    }
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_exact(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn matrix_to_string(a: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", a.rows(), a.cols());
    for i in 0..a.rows() {
        let line: Vec<String> = a.row(i).iter().map(|&x| format_exact(x)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(path: &Path, text: &str) -> Result<DenseMatrix> {
    let mut lines = content_lines(text);
    let (rows, cols) = parse_header(path, &mut lines)?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (lineno, line) in lines {
        if seen_rows == rows {
            return Err(Error::parse(path, lineno, format!("more than {rows} rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::parse(path, lineno, format!("bad value {tok:?}")))?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {cols} values, found {}", data.len() - before),
            ));
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(Error::parse(
            path,
            text.lines().count(),
            format!("expected {rows} rows, found {seen_rows}"),
        ));
    }
    DenseMatrix::new(rows, cols, data)
}

pub fn save_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    write(path.as_ref(), &matrix_to_string(a))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    parse_matrix(path, &read(path)?)
}

pub fn mask_to_string(mask: &ObservationMask) -> String {
    let mut out = format!("{} {}\n", mask.rows(), mask.cols());
    for &(i, j) in mask.indices() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn parse_mask(path: &Path, text: &str) -> Result<ObservationMask> {
    let mut lines = content_lines(text);
    let (rows, cols) = parse_header(path, &mut lines)?;
    let mut idx = Vec::new();
    for (lineno, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let ij = match parts.as_slice() {
            [i, j] => i.parse::<usize>().ok().zip(j.parse::<usize>().ok()),
            _ => None,
        };
        let (i, j) = ij.ok_or_else(|| Error::parse(path, lineno, format!("expected \"i j\", found {line:?}")))?;
        if i >= rows || j >= cols {
            return Err(Error::parse(
                path,
                lineno,
                format!("index ({i}, {j}) outside {rows}x{cols}"),
            ));
        }
        idx.push((i, j));
    }
    ObservationMask::new(rows, cols, idx)
}

pub fn save_mask(path: impl AsRef<Path>, mask: &ObservationMask) -> Result<()> {
    write(path.as_ref(), &mask_to_string(mask))
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<ObservationMask> {
    let path = path.as_ref();
    parse_mask(path, &read(path)?)
}

/// Reads `i j value` lines with 0-based indices.
pub fn load_entries(path: impl AsRef<Path>) -> Result<Vec<Rating>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut out = Vec::new();
    for (lineno, line) in content_lines(&text) {
        if line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let entry = match parts.as_slice() {
            [i, j, v] => match (i.parse(), j.parse(), v.parse::<f64>()) {
                (Ok(user), Ok(item), Ok(value)) if value.is_finite() => Some(Rating { user, item, value }),
                _ => None,
            },
            _ => None,
        };
        out.push(entry.ok_or_else(|| {
            Error::parse(path, lineno, format!("expected \"i j value\", found {line:?}"))
        })?);
    }
    Ok(out)
}

pub fn save_entries(path: impl AsRef<Path>, entries: &[Rating]) -> Result<()> {
    let mut out = String::new();
    for r in entries {
        let _ = writeln!(out, "{} {} {}", r.user, r.item, format_exact(r.value));
    }
    write(path.as_ref(), &out)
}

pub fn trace_to_csv(trace: &[IterRecord], with_ratio: bool) -> String {
    let mut out = String::from("iter,residual,objective,alpha,d");
    out.push_str(if with_ratio { ",ratio\n" } else { "\n" });
    for r in trace {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            r.iter,
            format_exact(r.residual),
            format_exact(r.objective),
            format_exact(r.alpha),
            r.rank
        );
        if with_ratio {
            out.push(',');
            if let Some(x) = r.stop_ratio {
                out.push_str(&format_exact(x));
            }
        }
        out.push('\n');
    }
    out
}

pub fn save_trace(path: impl AsRef<Path>, trace: &[IterRecord], with_ratio: bool) -> Result<()> {
    write(path.as_ref(), &trace_to_csv(trace, with_ratio))
}
