//! Model checkpoint: magic `SBCK`, u32 version, u32 metadata length and a
//! JSON metadata blob, u32 tensor count, then per tensor a u32 name length,
//! the name bytes, u32 rows, u32 cols, and rows*cols little-endian float32
//! values. The file ends with the FNV-1a 64-bit checksum of everything
//! after the magic.

use super::fnv1a64;
use crate::error::{CoreError, Result};
use crate::tensor::Matrix;
use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"SBCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub meta: serde_json::Value,
    pub tensors: Vec<(String, Matrix)>,
    pub checksum: u64,
}

impl Checkpoint {
    pub fn tensor(&self, name: &str) -> Result<&Matrix> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| CoreError::Input(format!("checkpoint missing tensor '{name}'")))
    }
}

pub fn save_checkpoint(
    path: &Path,
    meta: &serde_json::Value,
    tensors: &[(&str, &Matrix)],
) -> Result<u64> {
    let meta_bytes = serde_json::to_vec(meta)
        .map_err(|e| CoreError::Input(format!("checkpoint metadata: {e}")))?;
    let mut body = Vec::new();
    body.extend_from_slice(&VERSION.to_le_bytes());
    body.extend_from_slice(&(meta_bytes.len() as u32).to_le_bytes());
    body.extend_from_slice(&meta_bytes);
    body.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, matrix) in tensors {
        let name_bytes = name.as_bytes();
        body.extend_from_slice(&(name_bytes.len() as u32).to_le_bytes());
        body.extend_from_slice(name_bytes);
        body.extend_from_slice(&(matrix.rows() as u32).to_le_bytes());
        body.extend_from_slice(&(matrix.cols() as u32).to_le_bytes());
        for &v in matrix.data() {
            body.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let checksum = fnv1a64(&body);
    let mut out = Vec::with_capacity(4 + body.len() + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&body);
    out.extend_from_slice(&checksum.to_le_bytes());
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| CoreError::io(path.display().to_string(), e))?;
    Ok(checksum)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let loc = path.display().to_string();
    if bytes.len() < 20 || &bytes[0..4] != MAGIC {
        return Err(CoreError::format(loc, "bad magic (expected SBCK)"));
    }
    let body = &bytes[4..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
    let computed = fnv1a64(body);
    if stored != computed {
        return Err(CoreError::format(
            loc,
            format!("checksum mismatch: stored {stored:016x}, computed {computed:016x}"),
        ));
    }
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        if pos + n > body.len() {
            return Err(CoreError::format(loc.clone(), "truncated checkpoint"));
        }
        let s = &body[pos..pos + n];
        pos += n;
        Ok(s)
    };
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(CoreError::format(loc, format!("unsupported version {version}")));
    }
    let meta_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let meta: serde_json::Value = serde_json::from_slice(take(meta_len)?)
        .map_err(|e| CoreError::format(loc.clone(), format!("metadata: {e}")))?;
    let count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(name_len)?.to_vec())
            .map_err(|_| CoreError::format(loc.clone(), "tensor name is not utf-8"))?;
        let rows = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let raw = take(rows * cols * 4)?;
        let data: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        tensors.push((name, Matrix::from_vec(rows, cols, data)?));
    }
    Ok(Checkpoint {
        meta,
        tensors,
        checksum: stored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn checkpoint_round_trips_and_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.sbck");
        let w = Matrix::from_vec(2, 2, vec![0.5, -0.25, 1.0, 2.0]).unwrap();
        let b = Matrix::from_vec(2, 1, vec![0.0, 0.125]).unwrap();
        let meta = json!({"kind": "detector", "hidden": 2});
        let sum = save_checkpoint(&path, &meta, &[("w", &w), ("b", &b)]).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        assert_eq!(ck.checksum, sum);
        assert_eq!(ck.meta["kind"], "detector");
        assert_eq!(ck.tensor("w").unwrap().data(), w.data());
        assert_eq!(ck.tensor("b").unwrap().data(), b.data());
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.sbck");
        let w = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        save_checkpoint(&path, &serde_json::json!({}), &[("w", &w)]).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
