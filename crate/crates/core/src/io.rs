//! File formats: pattern CSV with JSON metadata sidecar, measured-data CSV,
//! and tabulated wavelength spectra.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::beam::WavelengthSpec;
use crate::error::{Error, Result};
use crate::fit::Dataset;
use crate::pattern::{IntensityPattern, PatternMeta};

/// Write the two-column pattern CSV: position in micrometres, intensity.
/// Output is deterministic byte-for-byte for identical patterns.
pub fn write_pattern_csv(pattern: &IntensityPattern, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(32 * pattern.len() + 32);
    out.push_str("position_um,intensity\n");
    for (x, v) in pattern.positions.iter().zip(&pattern.values) {
        let _ = writeln!(out, "{:e},{:e}", x * 1e6, v);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write the JSON metadata sidecar for a pattern.
pub fn write_pattern_metadata(pattern: &IntensityPattern, path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(&pattern.metadata)?;
    fs::write(path, json + "\n")?;
    Ok(())
}

/// Read a pattern CSV produced by [`write_pattern_csv`]. Metadata is not
/// recovered; the sidecar is informational.
pub fn read_pattern_csv(path: impl AsRef<Path>) -> Result<IntensityPattern> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    {
        let headers = reader.headers()?;
        if headers.len() < 2 || &headers[0] != "position_um" {
            return Err(Error::Data {
                line: 1,
                message: "expected header position_um,intensity".to_string(),
            });
        }
    }
    let mut positions = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let x: f64 = parse_field(&record, 0, line, "position_um")?;
        let v: f64 = parse_field(&record, 1, line, "intensity")?;
        positions.push(x * 1e-6);
        values.push(v);
    }
    IntensityPattern::new(positions, values, PatternMeta::default())
}

fn parse_field(record: &csv::StringRecord, idx: usize, line: usize, name: &str) -> Result<f64> {
    let raw = record.get(idx).ok_or(Error::Data {
        line,
        message: format!("missing column {name}"),
    })?;
    raw.parse().map_err(|_| Error::Data {
        line,
        message: format!("cannot parse {name} from \"{raw}\""),
    })
}

/// Load a measured dataset: header `position_um,counts[,sigma]`.
pub fn load_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let has_sigma;
    {
        let headers = reader.headers()?;
        let names: Vec<&str> = headers.iter().collect();
        match names.as_slice() {
            ["position_um", "counts"] => has_sigma = false,
            ["position_um", "counts", "sigma"] => has_sigma = true,
            other => {
                return Err(Error::Data {
                    line: 1,
                    message: format!(
                        "expected header position_um,counts[,sigma], got {other:?}"
                    ),
                })
            }
        }
    }
    let mut positions = Vec::new();
    let mut counts = Vec::new();
    let mut sigmas = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let expected = if has_sigma { 3 } else { 2 };
        if record.len() != expected {
            return Err(Error::Data {
                line,
                message: format!("expected {expected} columns, got {}", record.len()),
            });
        }
        let x: f64 = parse_field(&record, 0, line, "position_um")?;
        let c: f64 = parse_field(&record, 1, line, "counts")?;
        let x_m = x * 1e-6;
        if let Some(&prev) = positions.last() {
            if x_m <= prev {
                return Err(Error::Data {
                    line,
                    message: format!(
                        "positions must be strictly increasing; {x} um repeats or goes back"
                    ),
                });
            }
        }
        if !c.is_finite() || c < 0.0 {
            return Err(Error::Data {
                line,
                message: format!("counts must be finite and nonnegative, got {c}"),
            });
        }
        positions.push(x_m);
        counts.push(c);
        if has_sigma {
            let s: f64 = parse_field(&record, 2, line, "sigma")?;
            if !(s > 0.0) {
                return Err(Error::Data {
                    line,
                    message: format!("sigma must be positive, got {s}"),
                });
            }
            sigmas.push(s);
        }
    }
    Dataset::new(positions, counts, if has_sigma { Some(sigmas) } else { None })
}

/// Write a dataset in the same format `load_dataset_csv` reads.
pub fn write_dataset_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    match &dataset.sigmas {
        Some(sigmas) => {
            out.push_str("position_um,counts,sigma\n");
            for ((x, c), s) in dataset.positions.iter().zip(&dataset.counts).zip(sigmas) {
                let _ = writeln!(out, "{:e},{:e},{:e}", x * 1e6, c, s);
            }
        }
        None => {
            out.push_str("position_um,counts\n");
            for (x, c) in dataset.positions.iter().zip(&dataset.counts) {
                let _ = writeln!(out, "{:e},{:e}", x * 1e6, c);
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Load a tabulated wavelength spectrum: two columns, wavelength in
/// nanometres and relative weight. A header line is optional.
pub fn load_wavelength_table(path: impl AsRef<Path>) -> Result<WavelengthSpec> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut pairs = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Data {
                line: line_no,
                message: format!("expected 2 comma-separated columns, got {}", fields.len()),
            });
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => pairs.push((v[0] * 1e-9, v[1])),
            Err(_) if line_no == 1 => continue, // header line
            Err(_) => {
                return Err(Error::Data {
                    line: line_no,
                    message: format!("cannot parse numbers from \"{line}\""),
                })
            }
        }
    }
    WavelengthSpec::tabulated(pairs)
}
