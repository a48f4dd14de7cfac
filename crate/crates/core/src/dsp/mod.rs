//! Waveform handling and the interpretable acoustic feature bank.
//!
//! All framed operations share the same defaults: 25 ms Hann window, 10 ms
//! hop, FFT size = next power of two at or above the window, and a log
//! floor of 1e-10 before any logarithm. Audio is mono at 16 kHz; readers
//! resample on load.

mod augment;
mod fft;
mod features;
mod mel;
mod pause;
mod pitch;
mod quality;
mod spectral;
mod stft;
mod wav;

pub use augment::{apply_notch, augment, mix_noise_at_snr, AugmentConfig, NoiseSource};
pub use features::{extract_features, FeatureSet, FEATURE_COLUMNS};
pub use fft::{fft_in_place, ifft_in_place, next_pow2};
pub use mel::{filterbank_encoder, mel_filterbank, mfcc};
pub use pause::{pause_stats, PauseStats};
pub use pitch::{f0_autocorrelation, F0Track};
pub use quality::{voice_quality, GneConfig, VoiceQuality};
pub use spectral::{spectral_flux, spectral_stats, SpectralStats};
pub use stft::{stft_magnitude, FramedSpectra};
pub use wav::{read_wav, resample_linear, write_wav};

use crate::error::{CoreError, Result};

/// Working sample rate; every reader resamples to this.
pub const TARGET_SAMPLE_RATE: u32 = 16_000;
/// Analysis window in seconds.
pub const WINDOW_S: f64 = 0.025;
/// Analysis hop in seconds.
pub const HOP_S: f64 = 0.010;
/// Floor applied before logarithms.
pub const LOG_FLOOR: f64 = 1e-10;
/// Moving-average length (frames) for energy smoothing.
pub const SMOOTH_FRAMES: usize = 5;

/// Mono waveform with amplitudes nominally in [-1, 1].
#[derive(Debug, Clone)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0);
        Waveform {
            samples,
            sample_rate,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn window_len(&self) -> usize {
        (WINDOW_S * self.sample_rate as f64).round() as usize
    }

    pub fn hop_len(&self) -> usize {
        (HOP_S * self.sample_rate as f64).round() as usize
    }
}

/// Per-frame RMS energy at the shared window/hop settings.
pub fn rms_frames(w: &Waveform) -> Result<Vec<f64>> {
    let win = w.window_len();
    let hop = w.hop_len();
    if w.samples.len() < win {
        return Err(CoreError::Input(format!(
            "signal of {} samples is shorter than one {win}-sample window",
            w.samples.len()
        )));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + win <= w.samples.len() {
        let frame = &w.samples[start..start + win];
        let energy: f64 = frame.iter().map(|s| s * s).sum();
        out.push((energy / win as f64).sqrt());
        start += hop;
    }
    Ok(out)
}

/// Centered moving average with shrinking windows at the edges.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 || values.is_empty() {
        return values.to_vec();
    }
    let radius = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}
