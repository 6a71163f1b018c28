//! CSV tables for observations, estimates and curves.
//!
//! Floats are written with 17 significant digits so every `f64` survives a
//! write/read round trip. Observation files start with `# key=value` comment
//! lines describing the generating model.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::decompound::{ParametricEstimate, Reconstruction, Truth};
use crate::error::{Error, Result};
use crate::rotations::Rotation;

/// Lossless decimal form of an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            row,
            message: format!("{other:?}"),
        },
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?
        .flush()?;
    Ok(())
}

/// A header line followed by rows of fields, with `#` comment lines ignored.
/// Returns the header and the rows with their 1-based line numbers.
pub fn read_table<R: Read>(r: R, expected: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let required: Vec<&str> = expected.iter().copied().filter(|h| !h.ends_with('?')).collect();
    let names: Vec<&str> = header.iter().collect();
    let ok = names.len() >= required.len()
        && names.len() <= expected.len()
        && names.iter().zip(expected).all(|(n, e)| *n == e.trim_end_matches('?'));
    if !ok {
        return Err(Error::Parse {
            row: 1,
            message: format!("expected columns {}, found {}", expected.join(","), names.join(",")),
        });
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_error)?;
            let row = rec.position().map_or(0, |p| p.line() as usize);
            Ok((row, rec))
        })
        .collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, row: usize, i: usize, name: &str) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Parse {
        row,
        message: format!("missing column '{name}'"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        row,
        message: format!("cannot parse {name} '{raw}'"),
    })
}

fn optional_field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    row: usize,
    i: usize,
    name: &str,
) -> Result<Option<T>> {
    match rec.get(i) {
        None | Some("") => Ok(None),
        Some(_) => field(rec, row, i, name).map(Some),
    }
}

/// Rotations as unit quaternions `w,x,y,z`, preceded by `# key=value` lines.
pub fn write_observations<W: Write>(mut w: W, meta: &[(&str, String)], samples: &[Rotation]) -> Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    let mut out = writer(w);
    out.write_record(["w", "x", "y", "z"]).map_err(csv_error)?;
    for r in samples {
        out.write_record(r.quaternion().map(fmt_f64)).map_err(csv_error)?;
    }
    finish(out)
}

/// Observation file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFile {
    pub meta: BTreeMap<String, String>,
    pub samples: Vec<Rotation>,
}

/// Quaternions off by more than this from unit norm are rejected.
const UNIT_TOL: f64 = 1e-6;

pub fn read_observations<R: Read>(mut r: R) -> Result<ObservationFile> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let meta = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').trim().split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let rows = read_table(text.as_bytes(), &["w", "x", "y", "z"])?;
    let samples = rows
        .iter()
        .map(|(row, rec)| {
            let q: [f64; 4] = [
                field(rec, *row, 0, "w")?,
                field(rec, *row, 1, "x")?,
                field(rec, *row, 2, "y")?,
                field(rec, *row, 3, "z")?,
            ];
            let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !((norm - 1.0).abs() < UNIT_TOL) {
                return Err(Error::Parse {
                    row: *row,
                    message: format!("quaternion norm {norm} is not 1"),
                });
            }
            Ok(Rotation::from_unit_quaternion(q[0], q[1], q[2], q[3]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ObservationFile { meta, samples })
}

/// One row of an estimate table.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub delta: usize,
    pub a_hat: f64,
    pub gate_passed: bool,
    pub a_true: Option<f64>,
}

/// `delta,a_hat,gate_passed,a_true`; the last column only with a truth.
pub fn write_estimate<W: Write>(w: W, est: &ParametricEstimate, truth: Option<&Truth>) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec!["delta", "a_hat", "gate_passed"];
    if truth.is_some() {
        header.push("a_true");
    }
    out.write_record(&header).map_err(csv_error)?;
    for e in &est.entries {
        let mut rec = vec![e.delta.to_string(), fmt_f64(e.a_hat()), e.gate_passed.to_string()];
        if let Some(t) = truth {
            rec.push(fmt_f64(t.coefficient(e.delta)));
        }
        out.write_record(&rec).map_err(csv_error)?;
    }
    finish(out)
}

pub fn read_estimate<R: Read>(r: R) -> Result<Vec<EstimateRow>> {
    read_table(r, &["delta", "a_hat", "gate_passed", "a_true?"])?
        .iter()
        .map(|(row, rec)| {
            Ok(EstimateRow {
                delta: field(rec, *row, 0, "delta")?,
                a_hat: field(rec, *row, 1, "a_hat")?,
                gate_passed: field(rec, *row, 2, "gate_passed")?,
                a_true: optional_field(rec, *row, 3, "a_true")?,
            })
        })
        .collect()
}

/// Points of the reconstruction curve written by [`write_reconstruction`].
pub const CURVE_POINTS: usize = 512;

/// `theta,p_hat,p_true` on [`CURVE_POINTS`] equally spaced angles in `[0, π]`.
pub fn write_reconstruction<W: Write>(w: W, rec: &Reconstruction, truth: Option<&dyn Fn(f64) -> f64>) -> Result<()> {
    let rows: Vec<Vec<f64>> = rec
        .curve(CURVE_POINTS)
        .into_iter()
        .map(|(t, p)| match truth {
            Some(f) => vec![t, p, f(t)],
            None => vec![t, p],
        })
        .collect();
    let header: &[&str] = if truth.is_some() {
        &["theta", "p_hat", "p_true"]
    } else {
        &["theta", "p_hat"]
    };
    write_columns(w, header, &rows)
}

/// Numeric table with the given header.
pub fn write_columns<W: Write>(w: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(header).map_err(csv_error)?;
    for r in rows {
        out.write_record(r.iter().map(|x| fmt_f64(*x))).map_err(csv_error)?;
    }
    finish(out)
}

/// `delta,g_hat`, with an empty cell where the estimate is absent.
pub fn write_g_table<W: Write>(w: W, g_hat: &[Option<f64>]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["delta", "g_hat"]).map_err(csv_error)?;
    for (d, g) in g_hat.iter().enumerate() {
        out.write_record([d.to_string(), g.map(fmt_f64).unwrap_or_default()])
            .map_err(csv_error)?;
    }
    finish(out)
}

/// Numeric table whose header must match `header` (trailing `?` marks an
/// optional column). Empty cells read as NaN.
pub fn read_columns<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    read_table(r, header)?
        .iter()
        .map(|(row, rec)| {
            rec.iter()
                .enumerate()
                .map(|(i, raw)| {
                    if raw.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        raw.parse().map_err(|_| Error::Parse {
                            row: *row,
                            message: format!("cannot parse {} '{raw}'", header[i].trim_end_matches('?')),
                        })
                    }
                })
                .collect()
        })
        .collect()
}
