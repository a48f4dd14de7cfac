use super::{moving_average, rms_frames, Waveform, SMOOTH_FRAMES};
use crate::error::Result;

/// Non-speech statistics from energy thresholding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauseStats {
    pub longest_pause_s: f64,
    pub pauses_over_1s: usize,
    pub total_nonspeech_s: f64,
    pub nonspeech_ratio: f64,
}

const SILENCE_FLOOR: f64 = 1e-8;

/// Detect non-speech sections as frames whose smoothed RMS falls below
/// `threshold_rel` of the maximum.
///
/// The moving average pulls energy from loud neighbors into quiet frames,
/// shrinking detected runs by up to its radius at each edge; runs are grown
/// back over frames whose raw energy is also below threshold. A run of `k`
/// frames spans `(k - 1) * hop + window` seconds, which keeps a constructed
/// gap accurate to about one hop.
pub fn pause_stats(w: &Waveform, threshold_rel: f64) -> Result<PauseStats> {
    let energy = rms_frames(w)?;
    let duration = w.duration_s();
    let hop_s = w.hop_len() as f64 / w.sample_rate as f64;
    let window_s = w.window_len() as f64 / w.sample_rate as f64;

    let smoothed = moving_average(&energy, SMOOTH_FRAMES);
    let peak = smoothed.iter().cloned().fold(0.0f64, f64::max);
    if peak < SILENCE_FLOOR {
        // Degenerate all-silent signal.
        return Ok(PauseStats {
            longest_pause_s: duration,
            pauses_over_1s: usize::from(duration > 1.0),
            total_nonspeech_s: duration,
            nonspeech_ratio: 1.0,
        });
    }
    let threshold = threshold_rel * peak;
    let mut nonspeech: Vec<bool> = smoothed.iter().map(|&e| e < threshold).collect();

    // De-smear: reclaim frames at run edges that are genuinely quiet in the
    // raw energy, up to the smoother's radius.
    let radius = SMOOTH_FRAMES / 2;
    let original = nonspeech.clone();
    for i in 0..nonspeech.len() {
        if !original[i] {
            continue;
        }
        for d in 1..=radius {
            if i >= d && !original[i - d] && energy[i - d] < threshold {
                nonspeech[i - d] = true;
            }
            if i + d < original.len() && !original[i + d] && energy[i + d] < threshold {
                nonspeech[i + d] = true;
            }
        }
    }

    let mut longest = 0.0f64;
    let mut over_1s = 0usize;
    let mut total = 0.0f64;
    let mut run = 0usize;
    for i in 0..=nonspeech.len() {
        if i < nonspeech.len() && nonspeech[i] {
            run += 1;
            continue;
        }
        if run > 0 {
            let span = ((run - 1) as f64 * hop_s + window_s).min(duration);
            longest = longest.max(span);
            total += span;
            if span > 1.0 {
                over_1s += 1;
            }
            run = 0;
        }
    }
    total = total.min(duration);
    Ok(PauseStats {
        longest_pause_s: longest,
        pauses_over_1s: over_1s,
        total_nonspeech_s: total,
        nonspeech_ratio: total / duration,
    })
}
