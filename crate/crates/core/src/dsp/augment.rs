use super::Waveform;
use rand::Rng;

/// Where augmentation noise comes from.
#[derive(Debug, Clone)]
pub enum NoiseSource {
    White,
    /// Optional file-backed bank; a random clip is tiled/cut to length.
    Bank(Vec<Waveform>),
}

/// Waveform augmentation: additive noise at a random SNR plus a few random
/// notch filters.
#[derive(Debug, Clone)]
pub struct AugmentConfig {
    pub apply_probability: f64,
    pub snr_db_range: (f64, f64),
    pub notch_count_range: (u32, u32),
    pub noise: NoiseSource,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            apply_probability: 0.9,
            snr_db_range: (0.0, 15.0),
            notch_count_range: (2, 5),
            noise: NoiseSource::White,
        }
    }
}

/// Mix `noise` into `signal` scaled so the signal-to-noise power ratio hits
/// `snr_db` exactly (by measured powers). A silent signal is returned
/// unchanged since its SNR is undefined.
pub fn mix_noise_at_snr(signal: &Waveform, noise: &[f64], snr_db: f64) -> Waveform {
    assert_eq!(signal.samples.len(), noise.len());
    let p_signal: f64 =
        signal.samples.iter().map(|s| s * s).sum::<f64>() / signal.samples.len().max(1) as f64;
    let p_noise: f64 = noise.iter().map(|s| s * s).sum::<f64>() / noise.len().max(1) as f64;
    if p_signal <= 0.0 || p_noise <= 0.0 {
        return signal.clone();
    }
    let scale = (p_signal / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    Waveform::new(
        signal
            .samples
            .iter()
            .zip(noise.iter())
            .map(|(&s, &n)| s + scale * n)
            .collect(),
        signal.sample_rate,
    )
}

/// Second-order IIR notch (RBJ biquad) at `freq_hz`.
pub fn apply_notch(w: &Waveform, freq_hz: f64, q: f64) -> Waveform {
    let omega = 2.0 * std::f64::consts::PI * freq_hz / w.sample_rate as f64;
    let alpha = omega.sin() / (2.0 * q);
    let cos_w = omega.cos();
    let a0 = 1.0 + alpha;
    let (b0, b1, b2) = (1.0 / a0, -2.0 * cos_w / a0, 1.0 / a0);
    let (a1, a2) = (-2.0 * cos_w / a0, (1.0 - alpha) / a0);
    let mut out = Vec::with_capacity(w.samples.len());
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    for &x in &w.samples {
        let y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x;
        y2 = y1;
        y1 = y;
        out.push(y);
    }
    Waveform::new(out, w.sample_rate)
}

const NOTCH_Q: f64 = 30.0;
const NOTCH_MIN_HZ: f64 = 100.0;

/// With probability `apply_probability`: mix noise at a drawn SNR, then run
/// 2..=5 random notch filters. Output is clipped to [-1, 1]. Deterministic
/// for a given RNG state; when the probability gate does not fire the input
/// is returned bit-identical.
pub fn augment<R: Rng>(w: &Waveform, cfg: &AugmentConfig, rng: &mut R) -> Waveform {
    if rng.random::<f64>() >= cfg.apply_probability {
        return w.clone();
    }
    let snr_db = if cfg.snr_db_range.1 > cfg.snr_db_range.0 {
        rng.random_range(cfg.snr_db_range.0..cfg.snr_db_range.1)
    } else {
        cfg.snr_db_range.0
    };
    let noise: Vec<f64> = match &cfg.noise {
        NoiseSource::White => (0..w.samples.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        NoiseSource::Bank(clips) if !clips.is_empty() => {
            let clip = &clips[rng.random_range(0..clips.len())];
            (0..w.samples.len())
                .map(|i| clip.samples[i % clip.samples.len().max(1)])
                .collect()
        }
        NoiseSource::Bank(_) => (0..w.samples.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    let mut out = mix_noise_at_snr(w, &noise, snr_db);

    let notches = rng.random_range(cfg.notch_count_range.0..=cfg.notch_count_range.1);
    let nyquist = w.sample_rate as f64 / 2.0;
    for _ in 0..notches {
        let freq = rng.random_range(NOTCH_MIN_HZ..nyquist * 0.9);
        out = apply_notch(&out, freq, NOTCH_Q);
    }
    for s in out.samples.iter_mut() {
        *s = s.clamp(-1.0, 1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::TARGET_SAMPLE_RATE;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sine(freq: f64, seconds: f64) -> Waveform {
        let sr = TARGET_SAMPLE_RATE as f64;
        Waveform::new(
            (0..(seconds * sr) as usize)
                .map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / sr).sin())
                .collect(),
            TARGET_SAMPLE_RATE,
        )
    }

    #[test]
    fn disabled_augmentation_is_bit_identical() {
        let w = sine(440.0, 0.3);
        let cfg = AugmentConfig {
            apply_probability: 0.0,
            ..AugmentConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = augment(&w, &cfg, &mut rng);
        assert_eq!(out.samples, w.samples);
    }

    #[test]
    fn mixed_snr_hits_the_target() {
        let w = sine(440.0, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise: Vec<f64> = (0..w.samples.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mixed = mix_noise_at_snr(&w, &noise, 10.0);
        let p_signal: f64 =
            w.samples.iter().map(|s| s * s).sum::<f64>() / w.samples.len() as f64;
        let residual: Vec<f64> = mixed
            .samples
            .iter()
            .zip(&w.samples)
            .map(|(m, s)| m - s)
            .collect();
        let p_noise: f64 = residual.iter().map(|s| s * s).sum::<f64>() / residual.len() as f64;
        let measured = 10.0 * (p_signal / p_noise).log10();
        assert!((measured - 10.0).abs() < 0.5, "measured {measured} dB");
    }

    #[test]
    fn notch_attenuates_its_center_frequency() {
        let probe = sine(1000.0, 1.0);
        let filtered = apply_notch(&probe, 1000.0, NOTCH_Q);
        // Skip the transient, compare steady-state powers.
        let tail = 8000..16000;
        let p_in: f64 = probe.samples[tail.clone()].iter().map(|s| s * s).sum();
        let p_out: f64 = filtered.samples[tail].iter().map(|s| s * s).sum();
        let attenuation_db = 10.0 * (p_in / p_out).log10();
        assert!(attenuation_db >= 20.0, "attenuation {attenuation_db} dB");
    }

    #[test]
    fn same_seed_same_output() {
        let w = sine(200.0, 0.3);
        let cfg = AugmentConfig::default();
        let a = augment(&w, &cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let b = augment(&w, &cfg, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.samples, b.samples);
    }
}
