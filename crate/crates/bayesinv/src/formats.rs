//! CSV and binary PGM input/output.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a reload
//! reproduces every value bit for bit.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use bayesinv_core::samplers::SampleSet;
use bayesinv_core::stats::Summary;

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Header line of column names, then one line per kept draw.
pub fn write_samples_csv(path: &Path, s: &SampleSet) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", s.columns().join(","))?;
    for row in s.rows() {
        write_row(&mut w, row)?;
    }
    w.flush()
}

fn write_row(w: &mut impl Write, row: &[f64]) -> io::Result<()> {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            w.write_all(b",")?;
        }
        write!(w, "{v}")?;
    }
    w.write_all(b"\n")
}

/// Reads a numeric CSV with a header line into `(columns, row-major values)`.
pub fn read_csv(path: &Path) -> io::Result<(Vec<String>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| invalid("empty CSV"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut values = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let before = values.len();
        for field in line.split(',') {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| invalid(format!("line {}: '{field}': {e}", k + 2)))?,
            );
        }
        if values.len() - before != header.len() {
            return Err(invalid(format!("line {} has {} fields, expected {}", k + 2, values.len() - before, header.len())));
        }
    }
    Ok((header, values))
}

/// One line per component: name, mean, std, interval bounds.
pub fn write_summary_csv(path: &Path, names: &[String], s: &Summary) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "component,mean,std,ci_lo,ci_hi")?;
    for (j, name) in names.iter().enumerate() {
        writeln!(w, "{name},{},{},{},{}", s.mean[j], s.std[j], s.ci_lo[j], s.ci_hi[j])?;
    }
    w.flush()
}

/// A grayscale image with intensities scaled to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

/// Reads a binary (P5) PGM with maxval up to 65535.
pub fn read_pgm(path: &Path) -> io::Result<GrayImage> {
    parse_pgm(&fs::read(path)?)
}

pub fn parse_pgm(bytes: &[u8]) -> io::Result<GrayImage> {
    let mut pos = 0;
    let mut token = || -> io::Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(invalid("truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(invalid("only binary PGM (P5) is supported"));
    }
    let num = |t: String| t.parse::<usize>().map_err(|_| invalid(format!("bad PGM header field '{t}'")));
    let cols = num(token()?)?;
    let rows = num(token()?)?;
    let maxval = num(token()?)?;
    if !(1..=65535).contains(&maxval) || rows == 0 || cols == 0 {
        return Err(invalid("PGM size or maxval out of range"));
    }
    // exactly one whitespace byte separates header and raster
    let data = &bytes[pos + 1..];
    let wide = maxval > 255;
    let need = rows * cols * if wide { 2 } else { 1 };
    if data.len() < need {
        return Err(invalid(format!("PGM raster has {} bytes, expected {need}", data.len())));
    }
    let scale = maxval as f64;
    let pixels = if wide {
        data[..need]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale)
            .collect()
    } else {
        data[..need].iter().map(|b| *b as f64 / scale).collect()
    };
    Ok(GrayImage { rows, cols, pixels })
}

/// Writes `values` mapped linearly from `[lo, hi]` to `[0, maxval]`, clamped.
pub fn write_pgm(path: &Path, rows: usize, cols: usize, values: &[f64], lo: f64, hi: f64, maxval: u16) -> io::Result<()> {
    if values.len() != rows * cols {
        return Err(invalid("pixel count does not match the image size"));
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let m = maxval as f64;
    let level = |v: f64| (((v - lo) / span).clamp(0.0, 1.0) * m).round() as u16;
    let mut out = format!("P5\n{cols} {rows}\n{maxval}\n").into_bytes();
    for v in values {
        if maxval > 255 {
            out.extend_from_slice(&level(*v).to_be_bytes());
        } else {
            out.push(level(*v) as u8);
        }
    }
    fs::write(path, out)
}

/// Smallest and largest finite value.
pub fn value_range(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)))
}
