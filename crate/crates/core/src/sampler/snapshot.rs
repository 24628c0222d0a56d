//! Field snapshots: one line of JSON followed by little-endian `f64` values.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SNAPSHOT_FORMAT: &str = "sprinkle-field-snapshot/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub family: String,
    /// Grid shape; a single entry equal to `len` for unstructured point sets.
    pub shape: Vec<usize>,
    pub spacing: f64,
    pub seed: u64,
    pub replicate: u64,
    pub len: usize,
}

pub fn write_snapshot<W: Write>(mut w: W, header: &SnapshotHeader, values: &[f64]) -> Result<()> {
    if header.len != values.len() {
        return Err(Error::Parameter(format!(
            "snapshot header announces {} values but {} were given",
            header.len,
            values.len()
        )));
    }
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(r: R) -> Result<(SnapshotHeader, Vec<f64>)> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end())?;
    if header.format != SNAPSHOT_FORMAT {
        return Err(Error::Config(format!("unknown snapshot format {}", header.format)));
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * header.len {
        return Err(Error::Config(format!(
            "snapshot body has {} bytes, expected {}",
            bytes.len(),
            8 * header.len
        )));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, values))
}

pub fn save(path: &Path, header: &SnapshotHeader, values: &[f64]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(f), header, values)
}

pub fn load(path: &Path) -> Result<(SnapshotHeader, Vec<f64>)> {
    read_snapshot(std::fs::File::open(path)?)
}
