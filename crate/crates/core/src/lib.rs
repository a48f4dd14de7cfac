//! Core library for the speech biomarker toolkit.
//!
//! The pipeline has two trained stages and an interpretation layer:
//!
//! 1. A small classifier head ([`detector`]) turns a sequence of per-frame
//!    embeddings into a binary prediction via attention pooling.
//! 2. A mask-gated sparse autoencoder ([`sae`]) reconstructs the pooled
//!    vector through a sparse dictionary, one code per sample.
//! 3. The [`analysis`] module relates dictionary activations to
//!    interpretable acoustic features ([`dsp`]) with rank correlations,
//!    multiple-comparison adjustment, and attention/energy cross-checks.
//!
//! [`synth`] generates deterministic corpora with planted factors so every
//! claim can be verified at desk scale, and [`io`] defines the on-disk
//! formats shared with the command-line front end.

pub mod analysis;
pub mod checks;
pub mod detector;
pub mod dsp;
pub mod error;
pub mod io;
pub mod par;
pub mod sae;
pub mod synth;
pub mod tensor;

pub use error::{CoreError, Result};

/// splitmix64 step, used to derive independent RNG streams from one seed.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
