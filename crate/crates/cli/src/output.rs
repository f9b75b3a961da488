//! CSV, PGM and sidecar emitters.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use roadmetric::estimators::{Cell, ExperimentReport};
use roadmetric::metric::DistanceField;

use crate::CliError;

/// Seventeen significant digits, enough to round-trip any double.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Real(v) => format_real(*v),
        Cell::Int(v) => v.to_string(),
    }
}

/// Header row from `columns`, then one record per row, CRLF-terminated.
pub fn write_csv(path: &Path, columns: &[String], rows: &[Vec<Cell>]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(BufWriter::new(file));
    let io = |e: csv::Error| CliError::Io {
        path: path.to_path_buf(),
        msg: e.to_string(),
    };
    w.write_record(columns).map_err(io)?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(CliError::Usage(format!(
                "row has {} cells for {} columns",
                row.len(),
                columns.len()
            )));
        }
        w.write_record(row.iter().map(format_cell)).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Sidecar path `<path>.meta`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// `key = value` lines, readable back as a config file after the header.
pub fn write_meta(
    path: &Path,
    header: &[(String, String)],
    config: &[(String, String)],
) -> Result<(), CliError> {
    let mut text = String::new();
    for (k, v) in header {
        text.push_str(&format!("# {k} = {v}\n"));
    }
    for (k, v) in config {
        text.push_str(&format!("{k} = {v}\n"));
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// CSV of the report rows plus a sidecar with its configuration and warnings.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{}.csv", report.name));
    write_csv(&path, &report.columns, &report.rows)?;
    let mut header = vec![
        ("experiment".to_string(), report.name.clone()),
        ("code_hash".to_string(), report.code_hash.clone()),
    ];
    for w in &report.warnings {
        header.push(("warning".to_string(), w.clone()));
    }
    write_meta(&meta_path(&path), &header, &report.config)?;
    Ok(path)
}

/// 16-bit sample for value `v` on the scale `[0, v_max]`.
pub fn quantize(v: f64, v_max: f64) -> u16 {
    let x = if v_max > 0.0 {
        (v / v_max).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = if x.is_nan() { 1.0 } else { x };
    (65535.0 * x).round() as u16
}

/// Largest finite field value, the default PGM scale.
pub fn field_scale(field: &DistanceField) -> f64 {
    field
        .values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

/// Binary PGM with 16-bit big-endian samples, top row at the largest `y`,
/// plus a sidecar with geometry, scale, seed and `config`.
pub fn write_field_pgm(
    field: &DistanceField,
    path: &Path,
    v_max: f64,
    config: &[(String, String)],
) -> Result<(), CliError> {
    let g = &field.grid;
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut bytes = Vec::with_capacity(g.nx * g.ny * 2 + 32);
    bytes.extend_from_slice(format!("P5\n{} {}\n65535\n", g.nx, g.ny).as_bytes());
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            bytes.extend_from_slice(&quantize(field.value(i, j), v_max).to_be_bytes());
        }
    }
    w.write_all(&bytes).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))?;
    let origin = field
        .origin
        .coords()
        .iter()
        .map(|c| format_real(*c))
        .collect::<Vec<_>>()
        .join(",");
    let header = vec![
        ("nx".to_string(), g.nx.to_string()),
        ("ny".to_string(), g.ny.to_string()),
        (
            "lower".to_string(),
            format!("{},{}", format_real(g.lower[0]), format_real(g.lower[1])),
        ),
        (
            "upper".to_string(),
            format!("{},{}", format_real(g.upper[0]), format_real(g.upper[1])),
        ),
        ("origin".to_string(), origin),
        ("v_max".to_string(), format_real(v_max)),
        ("max_reliable".to_string(), format_real(field.max_reliable)),
        ("seed".to_string(), field.seed.to_string()),
        ("epsilon".to_string(), format_real(field.epsilon)),
    ];
    write_meta(&meta_path(path), &header, config)
}

/// Samples of a PGM written by [`write_field_pgm`], in file order.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u16>), CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |msg: &str| CliError::Io {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    let mut lines = Vec::new();
    for _ in 0..3 {
        let mut s = String::new();
        r.read_line(&mut s).map_err(|e| CliError::io(path, e))?;
        lines.push(s.trim().to_string());
    }
    if lines[0] != "P5" || lines[2] != "65535" {
        return Err(bad("not a 16-bit P5 file"));
    }
    let dims: Vec<usize> = lines[1]
        .split_whitespace()
        .filter_map(|s| s.parse().ok())
        .collect();
    if dims.len() != 2 {
        return Err(bad("bad dimensions line"));
    }
    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(|e| CliError::io(path, e))?;
    if raw.len() != dims[0] * dims[1] * 2 {
        return Err(bad("sample count does not match the header"));
    }
    let samples = raw
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok((dims[0], dims[1], samples))
}
