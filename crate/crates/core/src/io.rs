//! Sweep CSV files.
//!
//! One row per sweep point with a fixed header. Floats are written in the
//! shortest form that round-trips, so a file read back reproduces the
//! record bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analytic::TheoryCurve;
use crate::correlator::SweepRecord;
use crate::error::{Error, Result};

pub const SWEEP_HEADER: [&str; 6] = ["m", "l_m_meters", "c_raw", "c_norm", "theory_mean", "theory_std"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub l_m_meters: f64,
    pub c_raw: f64,
    pub c_norm: f64,
    pub theory_mean: f64,
    pub theory_std: f64,
}

/// Joins a record with its theory curve.
pub fn sweep_rows(record: &SweepRecord, theory: &TheoryCurve) -> Result<Vec<SweepRow>> {
    if theory.l_m.len() != record.points.len() {
        return Err(Error::invalid("theory", "grid length differs from record"));
    }
    Ok(record
        .points
        .iter()
        .map(|p| SweepRow {
            m: p.m,
            l_m_meters: p.l_m,
            c_raw: p.c_raw,
            c_norm: p.c_norm,
            theory_mean: theory.mean[p.m],
            theory_std: theory.std[p.m],
        })
        .collect())
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::Parse {
            line: pos.line(),
            reason: e.to_string(),
        },
        None => Error::Io(e.to_string()),
    }
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.l_m_meters.to_string(),
            r.c_raw.to_string(),
            r.c_norm.to_string(),
            r.theory_mean.to_string(),
            r.theory_std.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sweep file. The header must match [`SWEEP_HEADER`] exactly and
/// `m` must count up from zero.
pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SWEEP_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            reason: format!("expected header {}, got {}", SWEEP_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or("");
            s.trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                reason: format!("column {} is not a number: {s:?}", SWEEP_HEADER[i]),
            })
        };
        let m_text = rec.get(0).unwrap_or("");
        let m: usize = m_text.trim().parse().map_err(|_| Error::Parse {
            line,
            reason: format!("column m is not an index: {m_text:?}"),
        })?;
        if m != rows.len() {
            return Err(Error::Parse {
                line,
                reason: format!("expected m = {}, got {m}", rows.len()),
            });
        }
        rows.push(SweepRow {
            m,
            l_m_meters: field(1)?,
            c_raw: field(2)?,
            c_norm: field(3)?,
            theory_mean: field(4)?,
            theory_std: field(5)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            reason: "no data rows".into(),
        });
    }
    Ok(rows)
}
