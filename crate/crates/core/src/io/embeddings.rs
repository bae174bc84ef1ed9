//! Binary embedding file: `TSEB`, version, count, dim (u32 little-endian),
//! then `count * dim` little-endian f32.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Embedding;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"TSEB";
pub const EMBEDDING_VERSION: u32 = 1;
const HEADER: usize = 16;

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

/// Reads and normalizes `expected_count` vectors. `dim` of 0 accepts any dimension.
pub fn read_embeddings(path: &Path, expected_count: usize, dim: usize) -> Result<Vec<Embedding>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::Format {
        path: path.into(),
        msg,
    };
    if bytes.len() < HEADER || &bytes[..4] != EMBEDDING_MAGIC {
        return Err(bad("missing TSEB header".into()));
    }
    let version = u32_at(&bytes, 4);
    if version != EMBEDDING_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = u32_at(&bytes, 8) as usize;
    let file_dim = u32_at(&bytes, 12) as usize;
    if count != expected_count {
        return Err(bad(format!(
            "{count} embeddings for {expected_count} detections"
        )));
    }
    if dim != 0 && file_dim != dim {
        return Err(bad(format!("dimension {file_dim}, expected {dim}")));
    }
    if count > 0 && file_dim == 0 {
        return Err(bad("zero dimension".into()));
    }
    let expected_len = count
        .checked_mul(file_dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER));
    if expected_len != Some(bytes.len()) {
        return Err(bad(format!("size {} does not match header", bytes.len())));
    }
    bytes[HEADER..]
        .chunks_exact(4 * file_dim.max(1))
        .enumerate()
        .map(|(i, row)| {
            let v = row
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")) as f64)
                .collect();
            Embedding::new(v).map_err(|e| bad(format!("row {i}: {e}")))
        })
        .collect()
}

pub fn write_embeddings(path: &Path, rows: &[Vec<f32>], dim: usize) -> Result<()> {
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            left: r.len(),
            right: dim,
        });
    }
    let too_big = |_| Error::InvalidInput("embedding file too large".into());
    let mut bytes = Vec::with_capacity(HEADER + 4 * rows.len() * dim);
    bytes.extend_from_slice(EMBEDDING_MAGIC);
    bytes.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    bytes.extend_from_slice(&u32::try_from(rows.len()).map_err(too_big)?.to_le_bytes());
    bytes.extend_from_slice(&u32::try_from(dim).map_err(too_big)?.to_le_bytes());
    for v in rows.iter().flatten() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
