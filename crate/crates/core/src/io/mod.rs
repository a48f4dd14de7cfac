//! On-disk formats: JSON-lines manifests, little-endian float32 tensor
//! files, named-tensor checkpoints, and the fixed-schema CSVs.
//!
//! Every binary artifact starts with a four-byte magic and a u32 format
//! version so readers can fail loudly instead of misparsing.

mod checkpoint;
mod csvio;
mod embed;
mod manifest;
mod pooled;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use csvio::{read_csv, write_csv, CsvTable};
pub use embed::{read_embeddings, write_embeddings, EMBED_MAGIC};
pub use manifest::{
    read_manifest, write_manifest, Label, Language, ManifestEntry, SampleKind, SampleMeta, Sex,
};
pub use pooled::{read_pooled, write_pooled, POOLED_MAGIC};

/// FNV-1a 64-bit hash, used as the checkpoint integrity checksum.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::fnv1a64;

    #[test]
    fn fnv_known_vector() {
        // FNV-1a("a") from the reference tables.
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
    }
}
