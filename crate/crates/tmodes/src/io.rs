//! Artifact serialization: CSV writers and readers for fields, spectra,
//! decomposition manifests, convergence traces, and kernel heat maps, plus
//! JSON for structured reports.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), enough for
//! every f64 to round-trip to the exact same bits, so identical runs produce
//! byte-identical files.

use std::fs;
use std::path::Path;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::FrequencyGrid;
use crate::iteration::ModeExtractionResult;
use crate::jsf::JointSpectralKernel;
use crate::schmidt::SchmidtDecomposition;
use crate::Real;

fn io_err(e: std::io::Error) -> Error {
    Error::Io { reason: e.to_string() }
}

fn format_err(reason: impl Into<String>) -> Error {
    Error::Format { reason: reason.into() }
}

/// Canonical numeric text form: 17 significant digits, exact f64 round trip.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn num<T: Real>(x: T) -> String {
    fmt_num(x.to_f64().unwrap_or(f64::NAN))
}

fn parse_f64(cell: &str, path: &Path, line_no: usize) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| {
        format_err(format!("{}: line {line_no}: bad number {cell:?}", path.display()))
    })
}

fn read_rows(path: &Path, header: &str) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(io_err)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(first) if first.trim() == header => {}
        other => {
            return Err(format_err(format!(
                "{}: expected header {header:?}, found {other:?}",
                path.display()
            )))
        }
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if cells.len() != width {
            return Err(format_err(format!(
                "{}: line {}: expected {width} columns, found {}",
                path.display(),
                idx + 2,
                cells.len()
            )));
        }
        rows.push(cells);
    }
    Ok(rows)
}

/// Write plain text (tables, tags) to `path`.
pub fn write_string(path: impl AsRef<Path>, content: &str) -> Result<()> {
    fs::write(path, content).map_err(io_err)
}

/// Write any serializable value as pretty-printed JSON.
pub fn write_json<S: Serialize>(path: impl AsRef<Path>, value: &S) -> Result<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| format_err(e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err)
}

/// Write a complex spectral field as `omega,re,im` rows.
pub fn write_field_csv<T: Real>(
    path: impl AsRef<Path>,
    field: &SpectralField<T>,
) -> Result<()> {
    let mut out = String::from("omega,re,im\n");
    for (omega, amp) in field.grid().omegas().zip(field.amplitudes()) {
        out.push_str(&format!("{},{},{}\n", num(omega), num(amp.re), num(amp.im)));
    }
    fs::write(path, out).map_err(io_err)
}

/// Read a field written by [`write_field_csv`]. The grid is rebuilt from the
/// first and last frequencies; amplitudes come back bit-exact.
pub fn read_field_csv(path: impl AsRef<Path>) -> Result<SpectralField<f64>> {
    let path = path.as_ref();
    let rows = read_rows(path, "omega,re,im")?;
    if rows.len() < 2 {
        return Err(format_err(format!("{}: need at least 2 rows", path.display())));
    }
    let mut omegas = Vec::with_capacity(rows.len());
    let mut amps = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        omegas.push(parse_f64(&row[0], path, i + 2)?);
        amps.push(Complex::new(
            parse_f64(&row[1], path, i + 2)?,
            parse_f64(&row[2], path, i + 2)?,
        ));
    }
    let grid = FrequencyGrid::new(omegas[0], omegas[omegas.len() - 1], omegas.len())?;
    SpectralField::new(grid, amps)
}

/// Write a real-valued spectrum (intensity per bin) as `omega,intensity`.
pub fn write_spectrum_csv<T: Real>(
    path: impl AsRef<Path>,
    grid: &FrequencyGrid<T>,
    values: &[T],
) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch { context: "write_spectrum_csv" });
    }
    let mut out = String::from("omega,intensity\n");
    for (omega, v) in grid.omegas().zip(values) {
        out.push_str(&format!("{},{}\n", num(omega), num(*v)));
    }
    fs::write(path, out).map_err(io_err)
}

/// Write the decomposition manifest: one `k,r_k,G_k,power_gain` row per
/// retained mode (k is 1-based).
pub fn write_manifest_csv<T: Real>(
    path: impl AsRef<Path>,
    dec: &SchmidtDecomposition<T>,
) -> Result<()> {
    let mut out = String::from("k,r_k,G_k,power_gain\n");
    for k in 0..dec.retained_len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            k + 1,
            num(dec.r()[k]),
            num(dec.gain_of_mode(k)?),
            num(dec.power_gain_of_mode(k)?),
        ));
    }
    fs::write(path, out).map_err(io_err)
}

/// Read a manifest written by [`write_manifest_csv`] as
/// `(k, r_k, G_k, power_gain)` rows.
pub fn read_manifest_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, f64, f64, f64)>> {
    let path = path.as_ref();
    let rows = read_rows(path, "k,r_k,G_k,power_gain")?;
    let mut parsed = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let k = row[0].parse::<usize>().map_err(|_| {
            format_err(format!("{}: line {}: bad index {:?}", path.display(), i + 2, row[0]))
        })?;
        parsed.push((
            k,
            parse_f64(&row[1], path, i + 2)?,
            parse_f64(&row[2], path, i + 2)?,
            parse_f64(&row[3], path, i + 2)?,
        ));
    }
    Ok(parsed)
}

/// Write one extraction's convergence trace as `step,overlap,gain` rows
/// (step is 1-based; gain is the seeded power gain observed on that pass).
pub fn write_trace_csv<T: Real>(
    path: impl AsRef<Path>,
    result: &ModeExtractionResult<T>,
) -> Result<()> {
    let mut out = String::from("step,overlap,gain\n");
    for (i, (ov, g)) in
        result.overlap_history.iter().zip(&result.gain_history).enumerate()
    {
        out.push_str(&format!("{},{},{}\n", i + 1, num(*ov), num(*g)));
    }
    fs::write(path, out).map_err(io_err)
}

/// Read a trace written by [`write_trace_csv`] as `(step, overlap, gain)`.
pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, f64, f64)>> {
    let path = path.as_ref();
    let rows = read_rows(path, "step,overlap,gain")?;
    let mut parsed = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let step = row[0].parse::<usize>().map_err(|_| {
            format_err(format!("{}: line {}: bad step {:?}", path.display(), i + 2, row[0]))
        })?;
        parsed.push((step, parse_f64(&row[1], path, i + 2)?, parse_f64(&row[2], path, i + 2)?));
    }
    Ok(parsed)
}

/// Write the kernel's |F|² heat map, downsampled to at most
/// `max_per_axis` bins per axis: `omega_signal,omega_idler,intensity` rows.
pub fn write_heatmap_csv<T: Real>(
    path: impl AsRef<Path>,
    kernel: &JointSpectralKernel<T>,
    max_per_axis: usize,
) -> Result<()> {
    if max_per_axis == 0 {
        return Err(Error::InvalidParameter {
            name: "max_per_axis",
            reason: "must be at least 1".into(),
        });
    }
    let (sig, idl, intensity) = kernel.downsampled_intensity(max_per_axis);
    let mut out = String::from("omega_signal,omega_idler,intensity\n");
    for (i, row) in intensity.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", num(sig[i]), num(idl[j]), num(*v)));
        }
    }
    fs::write(path, out).map_err(io_err)
}

/// Write a small generic table; every row must match the header width.
pub fn write_table_csv(
    path: impl AsRef<Path>,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(format_err(format!(
                "table row has {} cells, header has {}",
                row.len(),
                header.len()
            )));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err)
}
