use crate::dsp::{mix_noise_at_snr, Waveform, TARGET_SAMPLE_RATE};
use crate::error::{CoreError, Result};
use crate::mix_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic oracle signals at 16 kHz.
#[derive(Debug, Clone, Copy)]
pub enum TestSignal {
    Sine { freq_hz: f64, seconds: f64 },
    AmSine {
        freq_hz: f64,
        seconds: f64,
        depth: f64,
        rate_hz: f64,
    },
    Noise { seconds: f64 },
    ToneGapTone { tone_s: f64, gap_s: f64 },
    SinePlusNoise {
        freq_hz: f64,
        seconds: f64,
        snr_db: f64,
    },
}

const PEAK: f64 = 0.8;

pub fn generate_test_signal(kind: &TestSignal, seed: u64) -> Result<Waveform> {
    let sr = TARGET_SAMPLE_RATE;
    let srf = sr as f64;
    let sine = |freq: f64, n: usize, amp: f64| -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / srf).sin())
            .collect()
    };
    match *kind {
        TestSignal::Sine { freq_hz, seconds } => {
            check_duration(seconds)?;
            Ok(Waveform::new(sine(freq_hz, (seconds * srf) as usize, PEAK), sr))
        }
        TestSignal::AmSine {
            freq_hz,
            seconds,
            depth,
            rate_hz,
        } => {
            check_duration(seconds)?;
            let n = (seconds * srf) as usize;
            let samples = (0..n)
                .map(|i| {
                    let t = i as f64 / srf;
                    let envelope = 1.0 + depth * (2.0 * std::f64::consts::PI * rate_hz * t).sin();
                    PEAK / (1.0 + depth) * envelope
                        * (2.0 * std::f64::consts::PI * freq_hz * t).sin()
                })
                .collect();
            Ok(Waveform::new(samples, sr))
        }
        TestSignal::Noise { seconds } => {
            check_duration(seconds)?;
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x40));
            let samples = (0..(seconds * srf) as usize)
                .map(|_| rng.random_range(-PEAK..PEAK))
                .collect();
            Ok(Waveform::new(samples, sr))
        }
        TestSignal::ToneGapTone { tone_s, gap_s } => {
            check_duration(tone_s)?;
            let mut samples = sine(220.0, (tone_s * srf) as usize, 0.7);
            samples.extend(std::iter::repeat_n(0.0, (gap_s * srf) as usize));
            samples.extend(sine(220.0, (tone_s * srf) as usize, 0.7));
            Ok(Waveform::new(samples, sr))
        }
        TestSignal::SinePlusNoise {
            freq_hz,
            seconds,
            snr_db,
        } => {
            check_duration(seconds)?;
            let clean = Waveform::new(sine(freq_hz, (seconds * srf) as usize, 0.5), sr);
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x41));
            let noise: Vec<f64> = (0..clean.samples.len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            Ok(mix_noise_at_snr(&clean, &noise, snr_db))
        }
    }
}

fn check_duration(seconds: f64) -> Result<()> {
    if seconds <= 0.0 || seconds > 600.0 {
        return Err(CoreError::Input(format!("bad duration {seconds} s")));
    }
    Ok(())
}

/// Speech-like synthetic waveform for wav corpora: harmonic bursts with
/// pauses. HC voices alternate harmonic emphasis inside each burst (more
/// spectral motion), PD voices hold a static pattern with added breath
/// noise.
pub fn wav_sample(speaker_f0: f64, pd: bool, seconds: f64, seed: u64) -> Waveform {
    let sr = TARGET_SAMPLE_RATE;
    let srf = sr as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x42));
    let total = (seconds * srf) as usize;
    let mut samples = vec![0.0f64; total];
    let mut pos = 0usize;
    let mut burst_idx = 0usize;
    while pos < total {
        let burst_len = (rng.random_range(0.35..0.55) * srf) as usize;
        let end = (pos + burst_len).min(total);
        for i in pos..end {
            let t = i as f64 / srf;
            let local = (i - pos) as f64 / srf;
            // alternate harmonic emphasis for HC every 100 ms
            let phase_flip = if pd { 0 } else { (local / 0.1) as usize % 2 };
            let mut v = 0.0;
            for h in 1..=5usize {
                let weight = if h % 2 == (phase_flip % 2) { 0.5 } else { 0.15 };
                v += weight / h as f64
                    * (2.0 * std::f64::consts::PI * speaker_f0 * h as f64 * t).sin();
            }
            if pd {
                v += 0.08 * rng.random_range(-1.0..1.0); // breathiness
            }
            // short fade at burst edges
            let fade = (local * 50.0).min(1.0).min(((end - i) as f64 / srf) * 50.0);
            samples[i] = 0.6 * v * fade.clamp(0.0, 1.0);
        }
        pos = end;
        // every third gap is long enough to count as a pause
        let gap_s = if burst_idx % 3 == 2 {
            rng.random_range(1.1..1.4)
        } else {
            rng.random_range(0.2..0.5)
        };
        pos += (gap_s * srf) as usize;
        burst_idx += 1;
    }
    for s in samples.iter_mut() {
        *s = s.clamp(-1.0, 1.0);
    }
    Waveform::new(samples, sr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::pause_stats;

    #[test]
    fn sine_has_the_documented_shape() {
        let w = generate_test_signal(
            &TestSignal::Sine {
                freq_hz: 100.0,
                seconds: 1.0,
            },
            0,
        )
        .unwrap();
        assert_eq!(w.samples.len(), 16_000);
        let peak = w.samples.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
        assert!((peak - 0.8).abs() < 1e-9, "peak {peak}");
    }

    #[test]
    fn tone_gap_tone_feeds_the_pause_oracle() {
        let w = generate_test_signal(
            &TestSignal::ToneGapTone {
                tone_s: 1.0,
                gap_s: 1.5,
            },
            0,
        )
        .unwrap();
        let p = pause_stats(&w, 0.05).unwrap();
        assert!((p.longest_pause_s - 1.5).abs() <= 0.011, "{}", p.longest_pause_s);
    }

    #[test]
    fn snr_construction_fixes_the_power_ratio() {
        let w = generate_test_signal(
            &TestSignal::SinePlusNoise {
                freq_hz: 100.0,
                seconds: 1.0,
                snr_db: 0.0,
            },
            3,
        )
        .unwrap();
        let clean = generate_test_signal(
            &TestSignal::Sine {
                freq_hz: 100.0,
                seconds: 1.0,
            },
            0,
        )
        .unwrap();
        // rebuild harmonic part at the construction amplitude 0.5
        let harmonic: Vec<f64> = clean.samples.iter().map(|s| s * 0.5 / 0.8).collect();
        let p_h: f64 = harmonic.iter().map(|s| s * s).sum();
        let p_n: f64 = w
            .samples
            .iter()
            .zip(&harmonic)
            .map(|(m, h)| (m - h) * (m - h))
            .sum();
        let ratio = p_h / p_n;
        assert!((ratio - 1.0).abs() < 0.12, "ratio {ratio}");
    }

    #[test]
    fn wav_sample_is_deterministic_and_bounded() {
        let a = wav_sample(140.0, true, 4.0, 9);
        let b = wav_sample(140.0, true, 4.0, 9);
        assert_eq!(a.samples, b.samples);
        assert!(a.samples.iter().all(|s| s.abs() <= 1.0));
    }
}
