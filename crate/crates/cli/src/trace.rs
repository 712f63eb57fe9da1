//! Trace CSV: `k,F,lyapunov,residual_sq,psnr,elapsed_s`, empty fields where
//! a column does not apply.

use std::io::{Read, Write};

use wcprox_core::metrics::Psnr;
use wcprox_core::solver::IterTrace;

use crate::error::{CliError, Result};

pub const HEADER: [&str; 6] = ["k", "F", "lyapunov", "residual_sq", "psnr", "elapsed_s"];

/// One parsed CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub objective: f64,
    pub lyapunov: Option<f64>,
    pub residual_sq: Option<f64>,
    pub psnr: Option<f64>,
    pub elapsed_s: Option<f64>,
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub fn write_trace(trace: &IterTrace, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Malformed(format!("writing trace: {e}"));
    w.write_record(HEADER).map_err(csv_err)?;
    for row in &trace.rows {
        let psnr = row.psnr.map(|p| match p {
            Psnr::Finite(db) => format_f64(db),
            Psnr::Infinite => "inf".to_string(),
        });
        w.write_record([
            row.k.to_string(),
            format_f64(row.objective),
            opt(row.lyapunov),
            opt(row.residual_sq),
            psnr.unwrap_or_default(),
            opt(row.elapsed_s),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Malformed(format!("writing trace: {e}")))?;
    Ok(())
}

pub fn trace_to_string(trace: &IterTrace) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf)?;
    Ok(String::from_utf8(buf).expect("ASCII output"))
}

/// Parses a trace; rejects a wrong header, ragged rows, non-numeric cells
/// and `k` that is not strictly increasing.
pub fn read_trace(input: impl Read) -> Result<Vec<TraceRecord>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let bad = |m: String| CliError::Malformed(format!("trace CSV: {m}"));
    let header = r.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(bad(format!("expected header {:?}", HEADER.join(","))));
    }
    let mut rows: Vec<TraceRecord> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let cell = |i: usize| -> Result<Option<f64>> {
            let s = rec.get(i).unwrap_or("").trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| bad(format!("row {}: column {} is not a number: {s:?}", line + 1, HEADER[i])))
        };
        let k = rec
            .get(0)
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| bad(format!("row {}: k is not a count", line + 1)))?;
        if rows.last().is_some_and(|p| p.k >= k) {
            return Err(bad(format!("row {}: k = {k} does not increase", line + 1)));
        }
        let objective =
            cell(1)?.filter(|v| v.is_finite()).ok_or_else(|| bad(format!("row {}: F missing", line + 1)))?;
        rows.push(TraceRecord {
            k,
            objective,
            lyapunov: cell(2)?,
            residual_sq: cell(3)?,
            psnr: cell(4)?,
            elapsed_s: cell(5)?,
        });
    }
    Ok(rows)
}
