//! Binary embedding container.
//!
//! Little-endian layout: magic `CPDM`, `u8` version (1), `u8` kind,
//! `u32` dim, `u32` count, then `count × dim` IEEE-754 binary32 values.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CPDM";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 4 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum EmbeddingKind {
    Title = 1,
    Thumbnail = 2,
    Keyframes = 3,
    Faces = 4,
}

impl EmbeddingKind {
    fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(Self::Title),
            2 => Some(Self::Thumbnail),
            3 => Some(Self::Keyframes),
            4 => Some(Self::Faces),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBlock {
    pub kind: EmbeddingKind,
    pub dim: usize,
    /// Row-major `count × dim`, widened to f64.
    pub rows: Vec<Vec<f64>>,
}

pub fn encode(kind: EmbeddingKind, dim: usize, rows: &[Vec<f64>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + rows.len() * dim * 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(kind as u8);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    for row in rows {
        debug_assert_eq!(row.len(), dim);
        for &v in row {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<EmbeddingBlock> {
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    if bytes[4] != VERSION {
        return Err(bad(format!("unsupported version {}", bytes[4])));
    }
    let kind = EmbeddingKind::from_u8(bytes[5]).ok_or_else(|| bad(format!("unknown kind {}", bytes[5])))?;
    let dim = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad("header size overflow".into()))?;
    if payload.len() != expected {
        return Err(bad(format!(
            "payload is {} bytes, header declares {count} × {dim} floats",
            payload.len()
        )));
    }
    let rows = if dim == 0 {
        vec![Vec::new(); count]
    } else {
        payload
            .chunks_exact(dim * 4)
            .map(|row| {
                row.chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                    .collect()
            })
            .collect()
    };
    Ok(EmbeddingBlock { kind, dim, rows })
}

pub fn read(path: &Path) -> Result<EmbeddingBlock> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

pub fn write(path: &Path, kind: EmbeddingKind, dim: usize, rows: &[Vec<f64>]) -> Result<()> {
    fs::write(path, encode(kind, dim, rows)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let bytes = encode(EmbeddingKind::Faces, 2, &[vec![1.0, -2.5]]);
        assert_eq!(&bytes[..4], b"CPDM");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 4);
        assert_eq!(&bytes[6..10], &2u32.to_le_bytes());
        assert_eq!(&bytes[10..14], &1u32.to_le_bytes());
        assert_eq!(&bytes[14..18], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 22);
    }

    #[test]
    fn rejects_truncated_payload() {
        let mut bytes = encode(EmbeddingKind::Title, 3, &[vec![1.0, 2.0, 3.0]]);
        bytes.pop();
        assert!(matches!(decode(&bytes, Path::new("x.emb")), Err(Error::Format { .. })));
    }

    #[test]
    fn zero_count_is_valid() {
        let bytes = encode(EmbeddingKind::Faces, 128, &[]);
        let block = decode(&bytes, Path::new("f.emb")).unwrap();
        assert_eq!(block.dim, 128);
        assert!(block.rows.is_empty());
    }

    proptest! {
        #[test]
        fn f32_payload_round_trips_bit_exact(
            rows in prop::collection::vec(prop::collection::vec(any::<f32>(), 3), 0..5)
        ) {
            let widened: Vec<Vec<f64>> =
                rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
            let bytes = encode(EmbeddingKind::Keyframes, 3, &widened);
            let block = decode(&bytes, Path::new("k.emb")).unwrap();
            prop_assert_eq!(encode(block.kind, block.dim, &block.rows), bytes);
        }
    }
}
