//! Mono WAV input/output: 16-bit PCM or float32, resampled to 16 kHz on
//! load by linear interpolation.

use super::{Waveform, TARGET_SAMPLE_RATE};
use crate::error::{CoreError, Result};
use std::fs;
use std::io::Write;
use std::path::Path;

pub fn read_wav(path: &Path) -> Result<Waveform> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let loc = path.display().to_string();
    if bytes.len() < 44 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(CoreError::format(loc, "not a RIFF/WAVE file"));
    }
    let mut pos = 12usize;
    let mut format: Option<(u16, u16, u32, u16)> = None; // tag, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_end = (pos + 8 + size).min(bytes.len());
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(CoreError::format(loc, "truncated fmt chunk"));
                }
                format = Some((
                    u16::from_le_bytes(body[0..2].try_into().unwrap()),
                    u16::from_le_bytes(body[2..4].try_into().unwrap()),
                    u32::from_le_bytes(body[4..8].try_into().unwrap()),
                    u16::from_le_bytes(body[14..16].try_into().unwrap()),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos += 8 + size + (size & 1);
    }
    let (tag, channels, rate, bits) =
        format.ok_or_else(|| CoreError::format(loc.clone(), "missing fmt chunk"))?;
    let data = data.ok_or_else(|| CoreError::format(loc.clone(), "missing data chunk"))?;
    if channels != 1 {
        return Err(CoreError::format(
            loc,
            format!("expected mono audio, found {channels} channels"),
        ));
    }
    let samples: Vec<f64> = match (tag, bits) {
        (1, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        (3, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        _ => {
            return Err(CoreError::format(
                loc,
                format!("unsupported format tag {tag} with {bits} bits"),
            ))
        }
    };
    let w = Waveform::new(samples, rate);
    Ok(if rate == TARGET_SAMPLE_RATE {
        w
    } else {
        resample_linear(&w, TARGET_SAMPLE_RATE)
    })
}

/// Write a float32 WAV (format tag 3).
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    let data_len = w.samples.len() * 4;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&3u16.to_le_bytes()); // IEEE float
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&w.sample_rate.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate * 4).to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&32u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &w.samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    let mut file =
        fs::File::create(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    file.write_all(&out)
        .map_err(|e| CoreError::io(path.display().to_string(), e))
}

/// Linear-interpolation resampler.
pub fn resample_linear(w: &Waveform, target_rate: u32) -> Waveform {
    if w.sample_rate == target_rate || w.samples.is_empty() {
        return Waveform::new(w.samples.clone(), target_rate);
    }
    let ratio = w.sample_rate as f64 / target_rate as f64;
    let out_len = (w.samples.len() as f64 / ratio).floor() as usize;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let idx = pos.floor() as usize;
            let frac = pos - idx as f64;
            let a = w.samples[idx.min(w.samples.len() - 1)];
            let b = w.samples[(idx + 1).min(w.samples.len() - 1)];
            a + frac * (b - a)
        })
        .collect();
    Waveform::new(samples, target_rate)
}
