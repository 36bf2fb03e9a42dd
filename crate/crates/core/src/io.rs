//! CSV and JSON helpers shared by the library and the command-line tool.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::grid::Grid;
use crate::lmi::Mat;
use crate::{Error, Result};

pub fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn rows_to_mat(rows: &[Vec<f64>]) -> Result<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        let s = format!("{v:?}");
        s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Renders a CSV table with the given header.
pub fn csv_string<R: AsRef<[f64]>>(header: &[&str], rows: &[R]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row.as_ref() {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv<R: AsRef<[f64]>>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    fs::write(path, csv_string(header, rows))?;
    Ok(())
}

/// Writes a sampled function as `x,value`.
pub fn write_sampled(path: &Path, grid: &Grid, values: &[f64]) -> Result<()> {
    grid.check(values)?;
    let rows: Vec<[f64; 2]> = grid.nodes().into_iter().zip(values).map(|(x, v)| [x, *v]).collect();
    write_csv(path, &["x", "value"], &rows)
}

/// Parses an `x,value` table on a uniform grid starting at 0.
pub fn parse_sampled(text: &str) -> Result<(Grid, Vec<f64>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == "x,value" => {}
        Some((i, h)) => {
            return Err(Error::Parse(format!(
                "line {}: expected header 'x,value', got '{h}'",
                i + 1
            )))
        }
        None => return Err(Error::Parse("empty sampled-function file".into())),
    }
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in lines {
        let mut parts = line.split(',').map(str::trim);
        let (Some(x), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("line {}: expected two columns", i + 1)));
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {}: bad number '{s}'", i + 1)))
        };
        xs.push(num(x)?);
        vs.push(num(v)?);
    }
    if xs.len() < 3 {
        return Err(Error::Parse("a sampled function needs at least 3 points".into()));
    }
    if xs[0].abs() > 1e-12 {
        return Err(Error::Parse("sampled functions must start at x = 0".into()));
    }
    let length = *xs.last().unwrap();
    let grid = Grid::new(length, xs.len())?;
    if grid.points != xs.len() {
        return Err(Error::Parse(format!(
            "sampled functions need an odd number of points, got {}",
            xs.len()
        )));
    }
    for (i, x) in xs.iter().enumerate() {
        if (x - grid.x(i)).abs() > 1e-9 * length {
            return Err(Error::Parse(format!(
                "sample {} at x = {x} is off the uniform grid",
                i + 1
            )));
        }
    }
    Ok((grid, vs))
}

pub fn read_sampled(path: &Path) -> Result<(Grid, Vec<f64>)> {
    parse_sampled(&fs::read_to_string(path)?)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&fs::read_to_string(path)?)
}

/// `[a, b, c]` with round-trip number formatting, for reports.
pub fn fmt_vec(v: &[f64]) -> String {
    let mut s = String::from("[");
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{}", fmt_f64(*x));
    }
    s.push(']');
    s
}
