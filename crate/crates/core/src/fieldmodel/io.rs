//! Field-set directory format: `manifest.json` plus one CSV per element.
//!
//! Samples are written as decimal text with 17 significant digits, which
//! round-trips every f64 bit-for-bit. Files use LF line endings and UTF-8.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{AngularGrid, ElementFieldSet, FieldOrigin};
use crate::error::{Error, Result};

const GRID_KIND: &str = "midpoint-theta-major";
const CSV_HEADER: &str = "theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    frequency_hz: f64,
    num_elements: usize,
    l: usize,
    q: usize,
    grid: String,
}

fn element_file_name(i: usize) -> String {
    format!("element_{i:03}.csv")
}

/// Writes a field set as a directory with a manifest and per-element CSVs.
pub fn save_field_set(set: &ElementFieldSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        frequency_hz: set.frequency_hz(),
        num_elements: set.num_elements(),
        l: set.grid().l(),
        q: set.grid().q(),
        grid: GRID_KIND.to_string(),
    };
    let manifest_path = dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(&manifest_path, json)?;

    let grid = set.grid();
    for i in 0..set.num_elements() {
        let file = fs::File::create(dir.join(element_file_name(i)))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{CSV_HEADER}")?;
        for p in 0..grid.len() {
            let (theta, phi) = grid.angles(p);
            let (et, ep) = set.at(i, p);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt17(theta.to_degrees()),
                fmt17(phi.to_degrees()),
                fmt17(et.re),
                fmt17(et.im),
                fmt17(ep.re),
                fmt17(ep.im),
            )?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Reads a field set saved by [`save_field_set`]. The result is a loaded set:
/// off-grid directions evaluate at the nearest grid point.
pub fn load_field_set(dir: &Path) -> Result<ElementFieldSet> {
    let manifest_path = dir.join("manifest.json");
    let manifest_str = fs::read_to_string(&manifest_path)
        .map_err(|e| Error::parse(manifest_path.display().to_string(), 0, e.to_string()))?;
    let manifest: Manifest = serde_json::from_str(&manifest_str)
        .map_err(|e| Error::parse(manifest_path.display().to_string(), 0, e.to_string()))?;
    if manifest.grid != GRID_KIND {
        return Err(Error::parse(
            manifest_path.display().to_string(),
            0,
            format!("unsupported grid \"{}\", expected \"{GRID_KIND}\"", manifest.grid),
        ));
    }
    let grid = AngularGrid::new(manifest.l, manifest.q)?;

    let mut samples = Vec::with_capacity(manifest.num_elements);
    for i in 0..manifest.num_elements {
        let path = dir.join(element_file_name(i));
        let file = fs::File::open(&path).map_err(|_| {
            Error::parse(
                dir.display().to_string(),
                0,
                format!(
                    "element count mismatch: manifest says {} elements but {} is missing",
                    manifest.num_elements,
                    element_file_name(i)
                ),
            )
        })?;
        samples.push(read_element_csv(&path, file, grid.len())?);
    }

    ElementFieldSet::from_parts(grid, samples, manifest.frequency_hz, FieldOrigin::Loaded)
}

fn read_element_csv(path: &Path, file: fs::File, points: usize) -> Result<Vec<Complex64>> {
    let path_str = path.display().to_string();
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::parse(path_str, 1, "empty file, expected header")),
    };
    if header.trim_end() != CSV_HEADER {
        return Err(Error::parse(
            path_str,
            1,
            format!("malformed header, expected \"{CSV_HEADER}\""),
        ));
    }

    let mut samples = Vec::with_capacity(2 * points);
    let mut rows = 0usize;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        rows += 1;
        if rows > points {
            return Err(Error::parse(
                path_str,
                line_no,
                format!("row count mismatch: expected {points} rows"),
            ));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                path_str,
                line_no,
                format!("expected 6 comma-separated values, found {}", fields.len()),
            ));
        }
        let mut values = [0.0f64; 6];
        for (slot, raw) in values.iter_mut().zip(&fields) {
            *slot = raw.trim().parse::<f64>().map_err(|_| {
                Error::parse(path_str.clone(), line_no, format!("invalid number \"{raw}\""))
            })?;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(path_str, line_no, "non-finite value"));
        }
        samples.push(Complex64::new(values[2], values[3]));
        samples.push(Complex64::new(values[4], values[5]));
    }
    if rows != points {
        return Err(Error::parse(
            path_str,
            rows + 1,
            format!("row count mismatch: expected {points} rows, found {rows}"),
        ));
    }
    Ok(samples)
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
