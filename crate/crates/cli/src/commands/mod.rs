pub mod attention;
pub mod correlate;
pub mod export_pooled;
pub mod extract;
pub mod gradcheck;
pub mod synth;
pub mod sweep;
pub mod train_detector;
pub mod train_sae;

use crate::config::RunConfig;
use crate::Common;
use sbkit_core::detector::{ClassifierHead, CorpusSample, SampleSource};
use sbkit_core::dsp::rms_frames;
use sbkit_core::io::load_checkpoint;
use sbkit_core::tensor::{Matrix, ParamTensor};
use sbkit_core::{CoreError, Result};
use std::fs;
use std::path::Path;

/// Build a command's config from defaults + file + --set + --seed.
pub fn resolve(
    common: &Common,
    command: &str,
    defaults: &[(&'static str, String)],
) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(command, defaults);
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_overrides(&common.sets)?;
    if let Some(seed) = common.seed {
        cfg.force_set("seed", seed);
    }
    Ok(cfg)
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CoreError::io(path.display().to_string(), e))
}

/// Parallelism convention: `-j 1` is strictly sequential, anything else
/// enables the data-parallel paths inside a pool of that size.
pub fn parallelism(common: &Common) -> (bool, usize) {
    (common.jobs != 1, common.jobs)
}

/// Reconstruct a detector head from a checkpoint.
pub fn head_from_checkpoint(path: &Path) -> Result<ClassifierHead> {
    let ck = load_checkpoint(path)?;
    if ck.meta.get("kind").and_then(|v| v.as_str()) != Some("detector") {
        return Err(CoreError::Format {
            path: path.display().to_string(),
            reason: "not a detector checkpoint".into(),
        });
    }
    let tensor = |name: &str| -> Result<Matrix> { ck.tensor(name).cloned() };
    let mut head = ClassifierHead::new(1, 1, 1, 0);
    head.w1 = ParamTensor::new(tensor("w1")?);
    head.b1 = ParamTensor::new(tensor("b1")?);
    head.attn_v = ParamTensor::new(tensor("attn_v")?);
    head.w2 = ParamTensor::new(tensor("w2")?);
    head.b2 = ParamTensor::new(tensor("b2")?);
    head.w_out = ParamTensor::new(tensor("w_out")?);
    head.b_out = ParamTensor::new(tensor("b_out")?);
    if let Some(rate) = ck.meta.get("dropout").and_then(|v| v.as_f64()) {
        head.dropout_rate = rate;
    }
    if let Some(slope) = ck.meta.get("leaky_slope").and_then(|v| v.as_f64()) {
        head.leaky_slope = slope;
    }
    Ok(head)
}

/// Frame-level energy for a sample: waveform RMS frames (same framing as
/// the built-in encoder) or per-frame RMS over embedding dimensions.
pub fn frame_energy(sample: &CorpusSample, frames: &Matrix) -> Result<Vec<f64>> {
    match &sample.source {
        SampleSource::Wav(w) => rms_frames(w),
        SampleSource::Embedding(_) => Ok((0..frames.rows())
            .map(|t| {
                let row = frames.row(t);
                (row.iter().map(|v| v * v).sum::<f64>() / row.len().max(1) as f64).sqrt()
            })
            .collect()),
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CoreError::Input(format!("json: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| CoreError::io(path.display().to_string(), e))
}
