//! Pooled-vector file: magic `SBPX`, u32 version, u32 count, u32 N, then
//! count*N little-endian float32 values, plus a JSON-lines sidecar
//! (`<file>.ids.jsonl`) mapping each row to its sample id.

use crate::error::{CoreError, Result};
use crate::tensor::Matrix;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const POOLED_MAGIC: &[u8; 4] = b"SBPX";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct RowId {
    row: usize,
    id: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".ids.jsonl");
    path.with_file_name(name)
}

pub fn write_pooled(path: &Path, vectors: &Matrix, ids: &[String]) -> Result<()> {
    if vectors.rows() != ids.len() {
        return Err(CoreError::Input(format!(
            "{} pooled rows but {} ids",
            vectors.rows(),
            ids.len()
        )));
    }
    let mut out = Vec::with_capacity(16 + vectors.data().len() * 4);
    out.extend_from_slice(POOLED_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(vectors.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(vectors.cols() as u32).to_le_bytes());
    for &v in vectors.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| CoreError::io(path.display().to_string(), e))?;

    let sidecar = sidecar_path(path);
    let mut file =
        fs::File::create(&sidecar).map_err(|e| CoreError::io(sidecar.display().to_string(), e))?;
    for (row, id) in ids.iter().enumerate() {
        let line = serde_json::to_string(&RowId { row, id: id.clone() })
            .map_err(|e| CoreError::Input(format!("sidecar serialization: {e}")))?;
        writeln!(file, "{line}").map_err(|e| CoreError::io(sidecar.display().to_string(), e))?;
    }
    Ok(())
}

pub fn read_pooled(path: &Path) -> Result<(Matrix, Vec<String>)> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let loc = path.display().to_string();
    if bytes.len() < 16 || &bytes[0..4] != POOLED_MAGIC {
        return Err(CoreError::format(loc, "bad magic (expected SBPX)"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CoreError::format(loc, format!("unsupported version {version}")));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let need = 16 + count * width * 4;
    if bytes.len() != need {
        return Err(CoreError::format(
            loc,
            format!("expected {need} bytes for {count}x{width}, found {}", bytes.len()),
        ));
    }
    let data: Vec<f64> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let vectors = Matrix::from_vec(count, width, data)?;

    let sidecar = sidecar_path(path);
    let text = fs::read_to_string(&sidecar)
        .map_err(|e| CoreError::io(sidecar.display().to_string(), e))?;
    let mut ids = vec![String::new(); count];
    let mut seen = 0usize;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row: RowId = serde_json::from_str(line)
            .map_err(|e| CoreError::format(sidecar.display().to_string(), e.to_string()))?;
        if row.row >= count {
            return Err(CoreError::format(
                sidecar.display().to_string(),
                format!("row {} out of range", row.row),
            ));
        }
        ids[row.row] = row.id;
        seen += 1;
    }
    if seen != count {
        return Err(CoreError::format(
            sidecar.display().to_string(),
            format!("{seen} id rows for {count} vectors"),
        ));
    }
    Ok((vectors, ids))
}
