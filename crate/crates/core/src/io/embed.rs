//! Embedding-sequence file: magic `SBEM`, u32 version, u32 T, u32 N, then
//! T*N little-endian float32 values in row-major order.

use crate::error::{CoreError, Result};
use crate::tensor::Matrix;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const EMBED_MAGIC: &[u8; 4] = b"SBEM";
const VERSION: u32 = 1;

pub fn write_embeddings(path: &Path, frames: &Matrix) -> Result<()> {
    let mut out = Vec::with_capacity(16 + frames.data().len() * 4);
    out.extend_from_slice(EMBED_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(frames.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(frames.cols() as u32).to_le_bytes());
    for &v in frames.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| CoreError::io(path.display().to_string(), e))
}

pub fn read_embeddings(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let loc = path.display().to_string();
    if bytes.len() < 16 || &bytes[0..4] != EMBED_MAGIC {
        return Err(CoreError::format(loc, "bad magic (expected SBEM)"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CoreError::format(loc, format!("unsupported version {version}")));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let need = 16 + rows * cols * 4;
    if bytes.len() != need {
        return Err(CoreError::format(
            loc,
            format!("expected {need} bytes for {rows}x{cols}, found {}", bytes.len()),
        ));
    }
    let data: Vec<f64> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Matrix::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embeddings_round_trip_at_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.sbem");
        let m = Matrix::from_vec(3, 2, vec![0.5, -1.25, 3.0, 0.0, 0.0009765625, -7.5]).unwrap();
        write_embeddings(&path, &m).unwrap();
        let back = read_embeddings(&path).unwrap();
        assert_eq!(back.shape(), (3, 2));
        // these values are exactly representable in f32
        assert_eq!(back.data(), m.data());
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.sbem");
        std::fs::write(&path, b"SBEM\x01\x00\x00\x00").unwrap();
        assert!(matches!(
            read_embeddings(&path),
            Err(CoreError::Format { .. })
        ));
    }
}
