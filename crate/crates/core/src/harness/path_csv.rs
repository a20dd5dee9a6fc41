//! Sample paths as `t,x` CSV, one row per grid point.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{FouError, Result};
use crate::fbm::{PathLabel, SamplePath, TimeGrid};

/// Relative tolerance on the spacing of a uniform grid read from disk.
const GRID_TOLERANCE: f64 = 1e-9;

pub fn path_to_csv(path: &SamplePath) -> String {
    let mut out = String::from("t,x\n");
    for (t, x) in path.grid().points().zip(path.values()) {
        writeln!(out, "{t:.16e},{x:.16e}").expect("write to string");
    }
    out
}

pub fn write_path_csv(path: &SamplePath, file: &Path) -> Result<()> {
    fs::write(file, path_to_csv(path)).map_err(|e| FouError::io(file, e))
}

fn parse_error(file: &Path, line: usize, message: impl Into<String>) -> FouError {
    FouError::Config { path: file.to_path_buf(), line, column: 0, message: message.into() }
}

/// Parses a `t,x` CSV. The grid must start at 0 and be uniform.
pub fn path_from_csv(text: &str, file: &Path, label: PathLabel) -> Result<SamplePath> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == "t,x" => {}
        Some((i, _)) => return Err(parse_error(file, i + 1, "expected header `t,x`")),
        None => return Err(parse_error(file, 0, "empty file")),
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        let mut fields = line.split(',');
        let (Some(t), Some(x), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_error(file, i + 1, "expected two fields"));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| parse_error(file, i + 1, format!("bad number {s:?}: {e}")))
        };
        times.push(parse(t)?);
        values.push(parse(x)?);
    }
    if times.len() < 2 {
        return Err(parse_error(file, 0, "a path needs at least two points"));
    }
    if times[0] != 0.0 {
        return Err(parse_error(file, 2, "the grid must start at t = 0"));
    }
    let n = times.len() - 1;
    let grid = TimeGrid::new(times[n], n)?;
    for (k, &t) in times.iter().enumerate() {
        if (t - grid.point(k)).abs() > GRID_TOLERANCE * grid.t_max() {
            return Err(parse_error(file, k + 2, format!("grid is not uniform at t = {t}")));
        }
    }
    SamplePath::new(grid, values, label)
}

pub fn read_path_csv(file: &Path, label: PathLabel) -> Result<SamplePath> {
    let text = fs::read_to_string(file).map_err(|e| FouError::io(file, e))?;
    path_from_csv(&text, file, label)
}
