//! Stage-1 detection head: linear -> attention pooling -> linear -> binary
//! output, trained with weighted binary cross-entropy over a balanced
//! sampler.

mod evaluate;
mod head;
mod sampler;
mod train;

pub use evaluate::{evaluate, Confusion, EvalReport};
pub use head::{attention_pool, bce_dlogit, bce_loss, Cache, ClassifierHead, Forward, HeadGrads};
pub use sampler::{cell_name, sample_weights, BalancedSampler};
pub use train::{corpus_frames, train_detector, EpochStats, TrainConfig, TrainOutcome};

use crate::dsp::{filterbank_encoder, read_wav, Waveform};
use crate::error::{CoreError, Result};
use crate::io::{read_embeddings, ManifestEntry, SampleKind, SampleMeta};
use crate::tensor::Matrix;
use std::path::Path;

/// Filterbank size of the built-in encoder used for wav corpora.
pub const ENCODER_MELS: usize = 80;
/// Long recordings are split into chunks of at most this many seconds.
pub const CHUNK_SECONDS: f64 = 30.0;

/// A sample the trainer can consume: either a precomputed embedding
/// sequence or a raw waveform routed through the built-in encoder.
#[derive(Debug, Clone)]
pub enum SampleSource {
    Embedding(Matrix),
    Wav(Waveform),
}

/// T x N embedding sequence with its metadata.
#[derive(Debug, Clone)]
pub struct EmbeddingSequence {
    pub meta: SampleMeta,
    pub frames: Matrix,
}

#[derive(Debug, Clone)]
pub struct CorpusSample {
    pub meta: SampleMeta,
    pub source: SampleSource,
}

/// Load every manifest entry, splitting waveforms longer than 30 s into
/// chunks with derived ids.
pub fn load_corpus(manifest_path: &Path, entries: &[ManifestEntry]) -> Result<Vec<CorpusSample>> {
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.resolve(manifest_path);
        match entry.kind {
            SampleKind::Embedding => {
                let frames = read_embeddings(&path)?;
                if frames.rows() == 0 {
                    return Err(CoreError::Input(format!("sample {} has no frames", entry.id)));
                }
                out.push(CorpusSample {
                    meta: entry.meta(),
                    source: SampleSource::Embedding(frames),
                });
            }
            SampleKind::Wav => {
                let wave = read_wav(&path)?;
                let chunk_len = (CHUNK_SECONDS * wave.sample_rate as f64) as usize;
                if wave.samples.len() <= chunk_len {
                    out.push(CorpusSample {
                        meta: entry.meta(),
                        source: SampleSource::Wav(wave),
                    });
                } else {
                    for (c, chunk) in wave.samples.chunks(chunk_len).enumerate() {
                        if chunk.len() < wave.sample_rate as usize / 10 {
                            continue; // drop sub-100ms tails
                        }
                        let mut meta = entry.meta();
                        meta.id = format!("{}#c{c}", entry.id);
                        out.push(CorpusSample {
                            meta,
                            source: SampleSource::Wav(Waveform::new(
                                chunk.to_vec(),
                                wave.sample_rate,
                            )),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Embed a sample without augmentation.
pub fn plain_frames(source: &SampleSource) -> Result<Matrix> {
    match source {
        SampleSource::Embedding(frames) => Ok(frames.clone()),
        SampleSource::Wav(w) => filterbank_encoder(w, ENCODER_MELS),
    }
}
