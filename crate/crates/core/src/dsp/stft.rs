use super::fft::{fft_in_place, next_pow2};
use super::Waveform;
use crate::error::{CoreError, Result};
use crate::tensor::Matrix;

/// Magnitude spectrogram: T frames by F = fft_size/2 + 1 bins.
#[derive(Debug, Clone)]
pub struct FramedSpectra {
    pub frames: Matrix,
    pub window_s: f64,
    pub hop_s: f64,
    pub sample_rate: u32,
    pub fft_size: usize,
}

impl FramedSpectra {
    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }

    pub fn num_bins(&self) -> usize {
        self.frames.cols()
    }

    /// Center frequency of bin `k` in Hz.
    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.fft_size as f64
    }
}

/// Hann-windowed magnitude STFT.
pub fn stft_magnitude(w: &Waveform, window_s: f64, hop_s: f64) -> Result<FramedSpectra> {
    if hop_s <= 0.0 || window_s <= 0.0 {
        return Err(CoreError::Input("window and hop must be positive".into()));
    }
    let win = (window_s * w.sample_rate as f64).round() as usize;
    let hop = (hop_s * w.sample_rate as f64).round() as usize;
    if win < 2 || hop == 0 {
        return Err(CoreError::Input("window too short for sample rate".into()));
    }
    if w.samples.len() < win {
        return Err(CoreError::Input(format!(
            "signal of {} samples is shorter than one {win}-sample window",
            w.samples.len()
        )));
    }
    let fft_size = next_pow2(win);
    let bins = fft_size / 2 + 1;
    let hann: Vec<f64> = (0..win)
        .map(|i| {
            0.5 * (1.0
                - (2.0 * std::f64::consts::PI * i as f64 / (win - 1) as f64).cos())
        })
        .collect();

    let num_frames = (w.samples.len() - win) / hop + 1;
    let mut frames = Matrix::zeros(num_frames, bins);
    let mut re = vec![0.0; fft_size];
    let mut im = vec![0.0; fft_size];
    for t in 0..num_frames {
        let start = t * hop;
        re[..win]
            .iter_mut()
            .zip(w.samples[start..start + win].iter().zip(hann.iter()))
            .for_each(|(dst, (&s, &h))| *dst = s * h);
        re[win..].fill(0.0);
        im.fill(0.0);
        fft_in_place(&mut re, &mut im);
        let row = frames.row_mut(t);
        for k in 0..bins {
            row[k] = (re[k] * re[k] + im[k] * im[k]).sqrt();
        }
    }
    Ok(FramedSpectra {
        frames,
        window_s,
        hop_s,
        sample_rate: w.sample_rate,
        fft_size,
    })
}
