//! Raster files: CSV (one lattice row per line) or 16-bit binary PGM.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use smdenoise::{Raster, SpotMask};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Pgm,
    /// Anything else the image crate decodes; read-only.
    Image,
}

fn format_of(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") | Some("txt") => Format::Csv,
        Some("pgm") => Format::Pgm,
        _ => Format::Image,
    }
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        v.to_string()
    }
}

pub fn read_raster(path: &Path) -> CliResult<Raster> {
    match format_of(path) {
        Format::Csv => read_csv(path),
        Format::Pgm | Format::Image => {
            let img = image::open(path).map_err(|e| CliError::io(path, e))?.into_luma16();
            let (w, h) = img.dimensions();
            let data = img.pixels().map(|p| f64::from(p.0[0])).collect();
            Raster::new(h as usize, w as usize, data).map_err(|e| CliError::io(path, e))
        }
    }
}

fn read_csv(path: &Path) -> CliResult<Raster> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut cols = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        if cols.is_some_and(|c| c != record.len()) {
            return Err(CliError::io(path, format!("row {} has {} values, expected {}", rows + 1, record.len(), cols.unwrap())));
        }
        cols = Some(record.len());
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::io(path, format!("row {}: '{field}' is not a number", rows + 1)))?;
            data.push(v);
        }
        rows += 1;
    }
    Raster::new(rows, cols.unwrap_or(0), data).map_err(|e| CliError::io(path, e))
}

fn write_csv_rows<I, S>(path: &Path, rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<S>>,
    S: AsRef<str>,
{
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let line = row.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(",");
        writeln!(w, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Maps `[min, max]` linearly onto `0..=65535`; a constant raster maps to 0.
fn to_u16(r: &Raster) -> Vec<u16> {
    let (lo, hi) = (r.min(), r.max());
    r.data()
        .iter()
        .map(|&v| if hi > lo { ((v - lo) / (hi - lo) * 65535.0).round() as u16 } else { 0 })
        .collect()
}

/// Binary P5 with maxval 65535 (big-endian samples); the image crate's PNM
/// encoder only writes 8-bit graymaps.
fn write_pgm16(path: &Path, rows: usize, cols: usize, data: Vec<u16>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{cols} {rows}\n65535\n").map_err(|e| CliError::io(path, e))?;
    for v in data {
        w.write_all(&v.to_be_bytes()).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_raster(path: &Path, r: &Raster) -> CliResult<()> {
    match format_of(path) {
        Format::Csv => write_csv_rows(path, r.data().chunks(r.cols()).map(|row| row.iter().map(|&v| fmt_real(v)).collect())),
        Format::Pgm => write_pgm16(path, r.rows(), r.cols(), to_u16(r)),
        Format::Image => Err(CliError::Usage(format!(
            "{}: output rasters must be .csv or .pgm",
            path.display()
        ))),
    }
}

/// Writes a mask as 0/1 (CSV) or 0/65535 (PGM).
pub fn write_mask(path: &Path, m: &SpotMask) -> CliResult<()> {
    match format_of(path) {
        Format::Csv => write_csv_rows(path, m.data().chunks(m.cols()).map(|row| row.iter().map(|v| v.to_string()).collect())),
        Format::Pgm => write_pgm16(path, m.rows(), m.cols(), m.data().iter().map(|&v| u16::from(v) * 65535).collect()),
        Format::Image => Err(CliError::Usage(format!("{}: masks must be .csv or .pgm", path.display()))),
    }
}

/// Creates `path` and writes the comment header; the caller appends records.
pub fn create_with_header(path: &Path, header: &str) -> CliResult<BufWriter<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(header.as_bytes()).map_err(|e| CliError::io(path, e))?;
    Ok(w)
}
