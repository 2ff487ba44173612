//! Text formats: MatrixMarket coordinate files for observed entries, CSV for
//! dense matrices, a plain tensor layout, and JSON.
//!
//! CSV matrices are row-major, comma-separated, without a header. Tensor
//! files start with a header line `m1 m2 m3` followed by the mode-1
//! unfolding, one row per line (`m1` lines of `m2 * m3` whitespace-separated
//! values).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::{fold, MatrixCompletionProblem, Tensor3};
use crate::Matrix;

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    token
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad number {token:?}")))
}

fn parse_usize(token: &str, line: usize) -> Result<usize> {
    token
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad integer {token:?}")))
}

/// Parses a real coordinate MatrixMarket file into `(rows, cols, entries)`
/// with zero-based indices.
pub fn parse_matrix_market(text: &str) -> Result<(usize, usize, Vec<(usize, usize, f64)>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, banner) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty MatrixMarket file".into()))?;
    let banner_lc = banner.to_ascii_lowercase();
    let fields: Vec<&str> = banner_lc.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::Parse(format!("unsupported MatrixMarket banner {banner:?}")));
    }
    if !matches!(fields[3], "real" | "integer" | "double") || fields[4] != "general" {
        return Err(Error::Parse(format!("only real general matrices are supported, got {banner:?}")));
    }
    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (ln, size) = body
        .next()
        .ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(Error::Parse(format!("line {ln}: expected `rows cols entries`")));
    }
    let (rows, cols, nnz) = (parse_usize(dims[0], ln)?, parse_usize(dims[1], ln)?, parse_usize(dims[2], ln)?);
    let mut entries = Vec::with_capacity(nnz);
    for (ln, line) in body {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(Error::Parse(format!("line {ln}: expected `row col value`")));
        }
        let (i, j) = (parse_usize(t[0], ln)?, parse_usize(t[1], ln)?);
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(Error::Parse(format!("line {ln}: index ({i}, {j}) outside {rows}x{cols}")));
        }
        entries.push((i - 1, j - 1, parse_f64(t[2], ln)?));
    }
    if entries.len() != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {}", entries.len())));
    }
    Ok((rows, cols, entries))
}

pub fn format_matrix_market(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{rows} {cols} {}", entries.len());
    for &(i, j, v) in entries {
        let _ = writeln!(out, "{} {} {v:?}", i + 1, j + 1);
    }
    out
}

/// Loads observed entries as a completion problem.
pub fn read_completion_problem(path: &Path) -> Result<MatrixCompletionProblem> {
    let (rows, cols, entries) = parse_matrix_market(&fs::read_to_string(path)?)?;
    MatrixCompletionProblem::from_entries(rows, cols, &entries)
}

/// Observed entries of a completion problem in column-major order.
pub fn write_completion_problem(path: &Path, problem: &MatrixCompletionProblem) -> Result<()> {
    let (rows, cols) = problem.mask().shape();
    let observed = problem.observed();
    let entries: Vec<_> = problem
        .mask()
        .indices()
        .map(|(i, j)| (i, j, observed[(i, j)]))
        .collect();
    fs::write(path, format_matrix_market(rows, cols, &entries))?;
    Ok(())
}

pub fn parse_csv_matrix(text: &str) -> Result<Matrix> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| parse_f64(t.trim(), ln + 1))
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Parse(format!("line {}: {} columns, expected {c}", ln + 1, row.len())))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    Ok(Matrix::from_row_slice(rows, cols.unwrap_or(0), &values))
}

/// Row-major CSV using the shortest round-tripping decimal form.
pub fn format_csv_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:?}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn read_csv_matrix(path: &Path) -> Result<Matrix> {
    parse_csv_matrix(&fs::read_to_string(path)?)
}

pub fn write_csv_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, format_csv_matrix(m))?;
    Ok(())
}

pub fn parse_tensor(text: &str) -> Result<Tensor3> {
    let mut tokens = text.split_whitespace();
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let t = tokens.next().ok_or_else(|| Error::Parse("tensor header needs three sizes".into()))?;
        *d = parse_usize(t, 1)?;
    }
    let values: Vec<f64> = tokens.map(|t| parse_f64(t, 0)).collect::<Result<_>>()?;
    let [m1, m2, m3] = dims;
    if values.len() != m1 * m2 * m3 {
        return Err(Error::Parse(format!(
            "tensor {m1}x{m2}x{m3} needs {} values, found {}",
            m1 * m2 * m3,
            values.len()
        )));
    }
    fold(&Matrix::from_row_slice(m1, m2 * m3, &values), 1, dims)
}

pub fn format_tensor(t: &Tensor3) -> Result<String> {
    let [m1, m2, m3] = t.dims();
    let unfolded = t.unfold(1)?;
    let mut out = format!("{m1} {m2} {m3}\n");
    for i in 0..unfolded.nrows() {
        for j in 0..unfolded.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:?}", unfolded[(i, j)]);
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn read_tensor(path: &Path) -> Result<Tensor3> {
    parse_tensor(&fs::read_to_string(path)?)
}

pub fn write_tensor(path: &Path, t: &Tensor3) -> Result<()> {
    fs::write(path, format_tensor(t)?)?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}
