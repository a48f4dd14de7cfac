use super::Waveform;
use crate::error::{CoreError, Result};

/// Per-frame fundamental frequency estimates with voicing decisions.
#[derive(Debug, Clone)]
pub struct F0Track {
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    /// Peak of the normalized autocorrelation per frame, reused for HNR.
    pub peak_corr: Vec<f64>,
    pub frame_len: usize,
    pub hop_len: usize,
}

impl F0Track {
    pub fn voiced_fraction(&self) -> f64 {
        if self.voiced.is_empty() {
            return 0.0;
        }
        self.voiced.iter().filter(|&&v| v).count() as f64 / self.voiced.len() as f64
    }

    pub fn mean_f0(&self) -> Option<f64> {
        let voiced: Vec<f64> = self
            .f0_hz
            .iter()
            .zip(&self.voiced)
            .filter(|(_, &v)| v)
            .map(|(&f, _)| f)
            .collect();
        if voiced.is_empty() {
            None
        } else {
            Some(voiced.iter().sum::<f64>() / voiced.len() as f64)
        }
    }
}

const VOICED_THRESHOLD: f64 = 0.5;
const ENERGY_FLOOR: f64 = 1e-12;

/// Autocorrelation F0 tracking.
///
/// Frames are sized to hold two periods of `f_min` so the longest candidate
/// lag still leaves a usable overlap. A frame is voiced when the normalized
/// autocorrelation peak exceeds 0.5; near-ties between candidate lags break
/// toward the longer lag (the lower F0) so octave-up errors lose.
pub fn f0_autocorrelation(w: &Waveform, f_min: f64, f_max: f64) -> Result<F0Track> {
    if f_min <= 0.0 || f_max <= f_min {
        return Err(CoreError::Input("need 0 < f_min < f_max".into()));
    }
    let sr = w.sample_rate as f64;
    let frame_len = (2.0 * sr / f_min).ceil() as usize;
    let hop_len = w.hop_len();
    if w.samples.len() < frame_len {
        return Err(CoreError::Input(format!(
            "signal of {} samples cannot hold two periods of {f_min} Hz",
            w.samples.len()
        )));
    }
    let lag_min = (sr / f_max).ceil() as usize;
    let lag_max = (sr / f_min).floor() as usize;

    let num_frames = (w.samples.len() - frame_len) / hop_len + 1;
    let mut f0 = Vec::with_capacity(num_frames);
    let mut voiced = Vec::with_capacity(num_frames);
    let mut peaks = Vec::with_capacity(num_frames);
    for t in 0..num_frames {
        let start = t * hop_len;
        let frame = &w.samples[start..start + frame_len];
        let mean = frame.iter().sum::<f64>() / frame_len as f64;
        let centered: Vec<f64> = frame.iter().map(|&s| s - mean).collect();
        let energy: f64 = centered.iter().map(|s| s * s).sum();
        if energy < ENERGY_FLOOR {
            f0.push(0.0);
            voiced.push(false);
            peaks.push(0.0);
            continue;
        }

        let mut best_lag = 0usize;
        let mut best_r = f64::NEG_INFINITY;
        let mut corr = vec![0.0; lag_max + 1];
        for lag in lag_min..=lag_max {
            let n = frame_len - lag;
            let mut num = 0.0;
            let mut e1 = 0.0;
            let mut e2 = 0.0;
            for i in 0..n {
                num += centered[i] * centered[i + lag];
                e1 += centered[i] * centered[i];
                e2 += centered[i + lag] * centered[i + lag];
            }
            let denom = (e1 * e2).sqrt();
            let r = if denom > 0.0 { num / denom } else { 0.0 };
            corr[lag] = r;
            // >= keeps the longest lag among ties
            if r >= best_r {
                best_r = r;
                best_lag = lag;
            }
        }

        if best_r > VOICED_THRESHOLD {
            // parabolic refinement around the winning lag
            let mut lag = best_lag as f64;
            if best_lag > lag_min && best_lag < lag_max {
                let (a, b, c) = (corr[best_lag - 1], corr[best_lag], corr[best_lag + 1]);
                let denom = a - 2.0 * b + c;
                if denom.abs() > 1e-12 {
                    let delta = 0.5 * (a - c) / denom;
                    if delta.abs() < 1.0 {
                        lag += delta;
                    }
                }
            }
            f0.push(sr / lag);
            voiced.push(true);
            peaks.push(best_r.min(1.0));
        } else {
            f0.push(0.0);
            voiced.push(false);
            peaks.push(best_r.max(0.0));
        }
    }
    Ok(F0Track {
        f0_hz: f0,
        voiced,
        peak_corr: peaks,
        frame_len,
        hop_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::TARGET_SAMPLE_RATE;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sine(freq: f64, seconds: f64) -> Waveform {
        let sr = TARGET_SAMPLE_RATE;
        let n = (seconds * sr as f64) as usize;
        Waveform::new(
            (0..n)
                .map(|i| 0.8 * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin())
                .collect(),
            sr,
        )
    }

    #[test]
    fn recovers_a_pure_100hz_tone() {
        let track = f0_autocorrelation(&sine(100.0, 1.0), 60.0, 400.0).unwrap();
        assert!(track.voiced_fraction() > 0.9);
        for (t, (&f, &v)) in track.f0_hz.iter().zip(&track.voiced).enumerate() {
            if v {
                assert!((f - 100.0).abs() < 1.0, "frame {t}: {f} Hz");
            }
        }
    }

    #[test]
    fn white_noise_is_mostly_unvoiced() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<f64> = (0..16_000).map(|_| rng.random_range(-0.5..0.5)).collect();
        let track =
            f0_autocorrelation(&Waveform::new(samples, TARGET_SAMPLE_RATE), 60.0, 400.0).unwrap();
        assert!(track.voiced_fraction() < 0.2);
    }

    #[test]
    fn silence_is_all_unvoiced() {
        let w = Waveform::new(vec![0.0; 16_000], TARGET_SAMPLE_RATE);
        let track = f0_autocorrelation(&w, 60.0, 400.0).unwrap();
        assert_eq!(track.voiced_fraction(), 0.0);
    }
}
