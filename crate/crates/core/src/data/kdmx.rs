//! `KDMX` binary matrix format.
//!
//! Layout: the magic bytes `KDMX`, `u32` rows, `u32` cols (little endian),
//! then `rows * cols` little-endian `f64` values in row-major order.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{KdicaError, Result};

pub const MAGIC: &[u8; 4] = b"KDMX";
/// Layout revision, recorded in run records.
pub const VERSION: u32 = 1;

pub fn write<W: Write>(w: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    let rows = u32::try_from(m.nrows()).map_err(std::io::Error::other)?;
    let cols = u32::try_from(m.ncols()).map_err(std::io::Error::other)?;
    let mut buf = Vec::with_capacity(12 + 8 * m.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    w.write_all(&buf)
}

/// Reads one matrix; `name` is used in error messages.
pub fn read<R: Read>(r: &mut R, name: &str) -> Result<DMatrix<f64>> {
    let bad = |msg: String| KdicaError::parse(name, msg);
    let mut header = [0u8; 12];
    r.read_exact(&mut header)
        .map_err(|e| bad(format!("truncated KDMX header: {e}")))?;
    if &header[..4] != MAGIC {
        return Err(bad("missing KDMX magic bytes".into()));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let len = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| bad("KDMX dimensions overflow".into()))?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)
        .map_err(|e| bad(format!("truncated KDMX payload ({rows}x{cols}): {e}")))?;
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    Ok(DMatrix::from_row_iterator(rows, cols, values))
}
