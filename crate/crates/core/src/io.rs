//! CSV tables and raw field dumps.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde_json::json;

use crate::eigen::EigenPair;
use crate::error::{Error, Result};
use crate::geometry::Weight;
use crate::perturbation::VariationReport;

/// Seventeen significant digits; negative zero prints as zero.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Columns `weight, index, lambda, residual, cluster_id, cluster_size`.
pub fn write_eigenpairs_csv<W: Write>(out: W, spectra: &[(Weight, Vec<EigenPair>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["weight", "index", "lambda", "residual", "cluster_id", "cluster_size"]).map_err(csv_error)?;
    for (alpha, pairs) in spectra {
        for (k, p) in pairs.iter().enumerate() {
            let size = pairs.iter().filter(|q| q.cluster_id == p.cluster_id).count();
            w.write_record([
                alpha.to_string(),
                k.to_string(),
                fmt_f64(p.lambda),
                fmt_f64(p.residual),
                p.cluster_id.to_string(),
                size.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `formula_id, analytic, numeric, abs_err, rel_err, step`.
pub fn write_reports_csv<W: Write>(out: W, reports: &[VariationReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["formula_id", "analytic", "numeric", "abs_err", "rel_err", "step"]).map_err(csv_error)?;
    for r in reports {
        w.write_record([
            r.formula_id.clone(),
            fmt_f64(r.analytic),
            fmt_f64(r.numeric),
            fmt_f64(r.abs_err),
            fmt_f64(r.rel_err),
            fmt_f64(r.step),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON header line, then `re, im` pairs as little-endian `f64`.
pub fn write_field<W: Write>(mut out: W, resolution: usize, alpha: &Weight, phi: &[Complex64]) -> Result<()> {
    let header = json!({
        "N": resolution,
        "alpha": alpha,
        "layout": "i + N*j, (re, im) little-endian f64",
        "len": phi.len(),
    });
    writeln!(out, "{header}")?;
    for z in phi {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: Read>(mut input: R) -> Result<Vec<Complex64>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::InvalidConfig("field dump has no header line".into()))?;
    let header: serde_json::Value = serde_json::from_slice(&bytes[..split])?;
    let len = header["len"].as_u64().ok_or_else(|| Error::InvalidConfig("field dump header lacks len".into()))? as usize;
    let body = &bytes[split + 1..];
    if body.len() != 16 * len {
        return Err(Error::DimensionMismatch {
            expected: 16 * len,
            got: body.len(),
        });
    }
    Ok(body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect())
}
