//! Field snapshot files.
//!
//! One ASCII header line
//!
//! ```text
//! KGELAB-FIELD v1; dim=<n>; points=<N1,..>; lengths=<L1,..>; encoding=f64le
//! ```
//!
//! followed by `prod(N_i)` little-endian 64-bit floats in row-major order.
//! Lengths are printed in shortest round-trip form, so reading a snapshot
//! reconstructs the grid bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

pub const MAGIC: &str = "KGELAB-FIELD v1";

pub fn write_field_to(w: &mut impl Write, field: &ScalarField) -> Result<()> {
    if field.is_overflowed() {
        return Err(Error::NonFinite("snapshot field".into()));
    }
    let g = field.grid();
    let points: Vec<String> = g.points().iter().map(|n| n.to_string()).collect();
    let lengths: Vec<String> = g.lengths().iter().map(|l| format!("{l}")).collect();
    writeln!(
        w,
        "{MAGIC}; dim={}; points={}; lengths={}; encoding=f64le",
        g.dim(),
        points.join(","),
        lengths.join(",")
    )?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_field(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field_to(&mut w, field)?;
    w.flush()?;
    Ok(())
}

fn header_value<'a>(part: &'a str, key: &str) -> Result<&'a str> {
    part.strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| Error::SnapshotFormat(format!("expected `{key}=<...>`, found `{part}`")))
}

pub fn read_field_from(r: &mut impl BufRead) -> Result<ScalarField> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let header = header.trim_end_matches(['\n', '\r']);
    let parts: Vec<&str> = header.split("; ").collect();
    if parts.len() != 5 || parts[0] != MAGIC {
        return Err(Error::SnapshotFormat(format!(
            "bad header `{header}`; expected `{MAGIC}; dim=..; points=..; lengths=..; encoding=f64le`"
        )));
    }
    let dim: usize = header_value(parts[1], "dim")?
        .parse()
        .map_err(|e| Error::SnapshotFormat(format!("dim: {e}")))?;
    let points: Vec<usize> = header_value(parts[2], "points")?
        .split(',')
        .map(|s| s.parse().map_err(|e| Error::SnapshotFormat(format!("points: {e}"))))
        .collect::<Result<_>>()?;
    let lengths: Vec<f64> = header_value(parts[3], "lengths")?
        .split(',')
        .map(|s| s.parse().map_err(|e| Error::SnapshotFormat(format!("lengths: {e}"))))
        .collect::<Result<_>>()?;
    if header_value(parts[4], "encoding")? != "f64le" {
        return Err(Error::SnapshotFormat("unsupported encoding".into()));
    }
    if points.len() != dim || lengths.len() != dim {
        return Err(Error::SnapshotFormat(format!(
            "dim={dim} but {} point counts and {} lengths",
            points.len(),
            lengths.len()
        )));
    }
    let grid = Grid::new(&points, &lengths)?;
    read_payload(r, &grid)
}

fn read_payload(r: &mut impl Read, grid: &Arc<Grid>) -> Result<ScalarField> {
    let mut bytes = vec![0u8; grid.total_points() * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::SnapshotFormat(format!("payload: {e}")))?;
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ScalarField::from_values(grid, values)
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    read_field_from(&mut r)
}
