//! Result files. Every real is written with 17 significant digits, which
//! round-trips any `f64` exactly.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::solver::SolveResult;

/// Pretty JSON whose floats carry 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", fmt_real(value))
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// `{:.16e}`: one leading digit plus 16 decimals.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing into memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    io_err(path, io::Error::other(e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

/// Writes a header and rows of reals.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
struct EnergyJson {
    kinetic: f64,
    potential: f64,
    nonlinear: f64,
    total: f64,
}

#[derive(Serialize)]
pub struct ResultJson {
    rho: f64,
    lambda: f64,
    residual: f64,
    energy: EnergyJson,
    iters: usize,
    converged: bool,
}

impl From<&SolveResult> for ResultJson {
    fn from(r: &SolveResult) -> Self {
        ResultJson {
            rho: r.rho,
            lambda: r.lambda,
            residual: r.residual,
            energy: EnergyJson {
                kinetic: r.breakdown.kinetic,
                potential: r.breakdown.potential,
                nonlinear: r.breakdown.nonlinear,
                total: r.breakdown.total,
            },
            iters: r.iters,
            converged: r.converged,
        }
    }
}

pub fn result_json(r: &SolveResult) -> String {
    to_json(&ResultJson::from(r))
}

/// `r,z,u` rows in storage order (z-major); the z column is dropped on
/// radial grids.
pub fn write_field_csv(path: &Path, u: &Field) -> Result<()> {
    let g = u.grid();
    let rows = (0..g.len()).map(|idx| {
        let (r, z) = g.coords(idx);
        let x = fmt_real(u.values()[idx]);
        if g.has_z() {
            vec![fmt_real(r), fmt_real(z), x]
        } else {
            vec![fmt_real(r), x]
        }
    });
    let header: &[&str] = if g.has_z() { &["r", "z", "u"] } else { &["r", "u"] };
    write_csv(path, header, rows)
}

/// Reads a field written by [`write_field_csv`] back onto `grid`, checking
/// the header, the row count and every node coordinate.
pub fn read_field_csv(path: &Path, grid: std::sync::Arc<Grid>) -> Result<Field> {
    let bad = |msg: String| io_err(path, io::Error::new(io::ErrorKind::InvalidData, msg));
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let want: &[&str] = if grid.has_z() { &["r", "z", "u"] } else { &["r", "u"] };
    let header = rd.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != want {
        return Err(bad(format!("expected header {want:?}, got {header:?}")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (idx, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let nums = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", idx + 1)))?;
        if idx >= grid.len() {
            return Err(bad(format!("more rows than the {} grid nodes", grid.len())));
        }
        let (r, z) = grid.coords(idx);
        let coord_ok = (nums[0] - r).abs() <= 1e-12 * r.abs().max(1.0)
            && (!grid.has_z() || (nums[1] - z).abs() <= 1e-12 * z.abs().max(1.0));
        if !coord_ok {
            return Err(bad(format!("row {} is not at node ({r}, {z})", idx + 1)));
        }
        values.push(*nums.last().unwrap());
    }
    if values.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    Field::new(grid, values)
}

pub fn write_trace_csv(path: &Path, r: &SolveResult) -> Result<()> {
    let rows = r.trace.iter().map(|t| {
        vec![
            t.iter.to_string(),
            fmt_real(t.energy),
            fmt_real(t.residual),
            fmt_real(t.dt),
        ]
    });
    write_csv(path, &["iter", "J", "residual", "dt"], rows)
}

/// Writes `result.json` and/or `field.csv` + `trace.csv` into `dir`,
/// returning the paths written.
pub fn export_solution(r: &SolveResult, dir: &Path, json: bool, csv: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut out = Vec::new();
    if json {
        let p = dir.join("result.json");
        write_text(&p, &result_json(r))?;
        out.push(p);
    }
    if csv {
        let p = dir.join("field.csv");
        write_field_csv(&p, &r.field)?;
        out.push(p);
        let p = dir.join("trace.csv");
        write_trace_csv(&p, r)?;
        out.push(p);
    }
    Ok(out)
}
