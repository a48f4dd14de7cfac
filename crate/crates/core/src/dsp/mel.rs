use super::stft::{stft_magnitude, FramedSpectra};
use super::{Waveform, HOP_S, LOG_FLOOR, WINDOW_S};
use crate::error::{CoreError, Result};
use crate::tensor::Matrix;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `bins x n_mels`, peak weight 1.
pub fn mel_filterbank(n_mels: usize, fft_size: usize, sample_rate: u32) -> Matrix {
    let bins = fft_size / 2 + 1;
    let f_max = sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(f_max);
    let centers: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect();
    let mut fb = Matrix::zeros(bins, n_mels);
    for k in 0..bins {
        let freq = k as f64 * sample_rate as f64 / fft_size as f64;
        for m in 0..n_mels {
            let (lo, mid, hi) = (centers[m], centers[m + 1], centers[m + 2]);
            let w = if freq >= lo && freq <= mid && mid > lo {
                (freq - lo) / (mid - lo)
            } else if freq > mid && freq <= hi && hi > mid {
                (hi - freq) / (hi - mid)
            } else {
                0.0
            };
            fb.set(k, m, w);
        }
    }
    fb
}

/// Log-mel energies per frame (power spectrum through the filterbank).
fn log_mel_frames(spectra: &FramedSpectra, n_mels: usize) -> Result<Matrix> {
    if spectra.num_bins() < n_mels {
        return Err(CoreError::Input(format!(
            "{} spectral bins cannot support {} mel bands",
            spectra.num_bins(),
            n_mels
        )));
    }
    let fb = mel_filterbank(n_mels, spectra.fft_size, spectra.sample_rate);
    let mut out = Matrix::zeros(spectra.num_frames(), n_mels);
    for t in 0..spectra.num_frames() {
        let row = spectra.frames.row(t);
        for m in 0..n_mels {
            let mut e = 0.0;
            for (k, &mag) in row.iter().enumerate() {
                let w = fb.at(k, m);
                if w > 0.0 {
                    e += w * mag * mag;
                }
            }
            out.set(t, m, e.max(LOG_FLOOR).ln());
        }
    }
    Ok(out)
}

/// First `n_coeffs` mel-frequency cepstral coefficients per frame, excluding
/// the 0th (overall gain) coefficient.
pub fn mfcc(spectra: &FramedSpectra, n_coeffs: usize, n_mels: usize) -> Result<Matrix> {
    let log_mel = log_mel_frames(spectra, n_mels)?;
    let j = n_mels as f64;
    let mut out = Matrix::zeros(log_mel.rows(), n_coeffs);
    for t in 0..log_mel.rows() {
        let energies = log_mel.row(t);
        for k in 1..=n_coeffs {
            let c: f64 = energies
                .iter()
                .enumerate()
                .map(|(jj, &e)| {
                    e * (std::f64::consts::PI * k as f64 * (2.0 * jj as f64 + 1.0) / (2.0 * j))
                        .cos()
                })
                .sum();
            out.set(t, k - 1, c);
        }
    }
    Ok(out)
}

/// Built-in shallow encoder: 80-band log-mel filterbank frames, so the whole
/// pipeline runs end to end without any external embedding model.
pub fn filterbank_encoder(w: &Waveform, n_mels: usize) -> Result<Matrix> {
    let spectra = stft_magnitude(w, WINDOW_S, HOP_S)?;
    log_mel_frames(&spectra, n_mels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::TARGET_SAMPLE_RATE;

    fn tone(freq: f64, amp: f64, seconds: f64) -> Waveform {
        let sr = TARGET_SAMPLE_RATE;
        let n = (seconds * sr as f64) as usize;
        Waveform::new(
            (0..n)
                .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin())
                .collect(),
            sr,
        )
    }

    #[test]
    fn identical_frames_identical_coefficients() {
        // 400 Hz advances exactly 4 cycles per 10 ms hop, so every frame is
        // sample-identical and the coefficient rows must match bitwise.
        let w = tone(400.0, 0.5, 0.2);
        let spectra = stft_magnitude(&w, WINDOW_S, HOP_S).unwrap();
        let c = mfcc(&spectra, 4, 26).unwrap();
        for t in 1..c.rows() {
            for k in 0..4 {
                assert!((c.at(0, k) - c.at(t, k)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flat_log_mel_gives_zero_coefficients() {
        // DCT-II of a constant vector is zero for every k >= 1.
        let energies = vec![0.3f64; 26];
        for k in 1..=4usize {
            let c: f64 = energies
                .iter()
                .enumerate()
                .map(|(j, &e)| {
                    e * (std::f64::consts::PI * k as f64 * (2.0 * j as f64 + 1.0) / 52.0).cos()
                })
                .sum();
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn gain_shifts_only_the_zeroth_coefficient() {
        // Broadband input keeps every mel band above the log floor, so a
        // gain change is a pure constant shift in log-mel space.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<f64> = (0..3200).map(|_| rng.random_range(-0.4..0.4)).collect();
        let quiet = Waveform::new(samples.clone(), TARGET_SAMPLE_RATE);
        let loud = Waveform::new(samples.iter().map(|s| s * 2.0).collect(), TARGET_SAMPLE_RATE);
        let c_quiet = mfcc(&stft_magnitude(&quiet, WINDOW_S, HOP_S).unwrap(), 4, 26).unwrap();
        let c_loud = mfcc(&stft_magnitude(&loud, WINDOW_S, HOP_S).unwrap(), 4, 26).unwrap();
        for t in 0..c_quiet.rows() {
            for k in 0..4 {
                assert!(
                    (c_quiet.at(t, k) - c_loud.at(t, k)).abs() < 1e-9,
                    "coefficient {k} moved under gain"
                );
            }
        }
    }

    #[test]
    fn silence_encodes_to_the_log_floor() {
        let w = Waveform::new(vec![0.0; 1600], TARGET_SAMPLE_RATE);
        let frames = filterbank_encoder(&w, 80).unwrap();
        let floor = LOG_FLOOR.ln();
        assert!(frames.data().iter().all(|&v| (v - floor).abs() < 1e-12));
    }

    #[test]
    fn louder_tone_has_more_filterbank_energy() {
        let quiet = filterbank_encoder(&tone(300.0, 0.2, 0.2), 80).unwrap();
        let loud = filterbank_encoder(&tone(300.0, 0.8, 0.2), 80).unwrap();
        assert_eq!(quiet.rows(), loud.rows());
        let sum_q: f64 = quiet.data().iter().sum();
        let sum_l: f64 = loud.data().iter().sum();
        assert!(sum_l > sum_q);
    }
}
