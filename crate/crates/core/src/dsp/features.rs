//! The interpretable per-utterance feature bank.

use super::pause::{pause_stats, PauseStats};
use super::pitch::f0_autocorrelation;
use super::quality::voice_quality;
use super::spectral::{spectral_flux, spectral_stats};
use super::stft::stft_magnitude;
use super::{mfcc, Waveform, HOP_S, WINDOW_S};
use crate::error::Result;
use std::collections::BTreeMap;

/// Fixed column order shared by the feature CSV and the analysis layer.
pub const FEATURE_COLUMNS: &[&str] = &[
    "spectral_centroid",
    "spectral_spread",
    "spectral_skew",
    "spectral_kurtosis",
    "spectral_entropy",
    "spectral_flatness",
    "spectral_crest",
    "spectral_flux",
    "mfcc_1",
    "mfcc_2",
    "mfcc_3",
    "mfcc_4",
    "f0_mean",
    "hnr_db",
    "jitter_local",
    "shimmer_local",
    "gne",
    "longest_pause_s",
    "pauses_over_1s",
    "total_nonspeech_s",
    "nonspeech_ratio",
];

/// Named utterance-level features; `None` marks a feature as missing.
#[derive(Debug, Clone, Default)]
pub struct FeatureSet {
    values: BTreeMap<&'static str, Option<f64>>,
}

impl FeatureSet {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied().flatten()
    }

    fn set(&mut self, name: &'static str, value: Option<f64>) {
        self.values.insert(name, value);
    }

    /// Values in [`FEATURE_COLUMNS`] order.
    pub fn row(&self) -> Vec<Option<f64>> {
        FEATURE_COLUMNS
            .iter()
            .map(|name| self.values.get(name).copied().flatten())
            .collect()
    }
}

/// Extract every feature for one waveform.
///
/// Spectral shape statistics (centroid through crest) are computed on the
/// magnitude spectrum averaged over non-silent frames; frame-level noise in
/// the geometric mean otherwise biases flatness well below 1 even for ideal
/// white noise. Pitch-dependent features report missing on unvoiced input.
pub fn extract_features(w: &Waveform) -> Result<FeatureSet> {
    let mut out = FeatureSet::default();
    let spectra = stft_magnitude(w, WINDOW_S, HOP_S)?;

    // average spectrum over frames with any energy
    let bins = spectra.num_bins();
    let mut mean_spectrum = vec![0.0f64; bins];
    let mut used = 0usize;
    for t in 0..spectra.num_frames() {
        let row = spectra.frames.row(t);
        if row.iter().any(|&m| m > 0.0) {
            for (acc, &m) in mean_spectrum.iter_mut().zip(row) {
                *acc += m;
            }
            used += 1;
        }
    }
    if used > 0 {
        for v in mean_spectrum.iter_mut() {
            *v /= used as f64;
        }
    }
    let freqs: Vec<f64> = (0..bins).map(|k| spectra.bin_freq(k)).collect();
    match spectral_stats(&mean_spectrum, &freqs) {
        Some(s) => {
            out.set("spectral_centroid", Some(s.centroid_hz));
            out.set("spectral_spread", Some(s.spread_hz));
            out.set("spectral_skew", Some(s.skew));
            out.set("spectral_kurtosis", Some(s.kurtosis));
            out.set("spectral_entropy", Some(s.entropy));
            out.set("spectral_flatness", Some(s.flatness));
            out.set("spectral_crest", Some(s.crest));
        }
        None => {
            for name in &FEATURE_COLUMNS[0..7] {
                out.set(name, None);
            }
        }
    }

    out.set(
        "spectral_flux",
        if spectra.num_frames() >= 2 {
            Some(spectral_flux(&spectra, None)?)
        } else {
            None
        },
    );

    let coeffs = mfcc(&spectra, 4, 26)?;
    let names = ["mfcc_1", "mfcc_2", "mfcc_3", "mfcc_4"];
    for (k, name) in names.iter().enumerate() {
        let mean = (0..coeffs.rows()).map(|t| coeffs.at(t, k)).sum::<f64>()
            / coeffs.rows().max(1) as f64;
        out.set(name, if coeffs.rows() > 0 { Some(mean) } else { None });
    }

    let track = f0_autocorrelation(w, 60.0, 400.0)?;
    out.set("f0_mean", track.mean_f0());
    let quality = voice_quality(w, &track);
    out.set("hnr_db", quality.hnr_db);
    out.set("jitter_local", quality.jitter_local);
    out.set("shimmer_local", quality.shimmer_local);
    out.set("gne", quality.gne);

    let pauses: PauseStats = pause_stats(w, 0.05)?;
    out.set("longest_pause_s", Some(pauses.longest_pause_s));
    out.set("pauses_over_1s", Some(pauses.pauses_over_1s as f64));
    out.set("total_nonspeech_s", Some(pauses.total_nonspeech_s));
    out.set("nonspeech_ratio", Some(pauses.nonspeech_ratio));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::TARGET_SAMPLE_RATE;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn white_noise(seconds: f64, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (seconds * TARGET_SAMPLE_RATE as f64) as usize;
        Waveform::new(
            (0..n).map(|_| rng.random_range(-0.8..0.8)).collect(),
            TARGET_SAMPLE_RATE,
        )
    }

    fn sine(freq: f64, seconds: f64) -> Waveform {
        let sr = TARGET_SAMPLE_RATE as f64;
        Waveform::new(
            (0..(seconds * sr) as usize)
                .map(|i| 0.8 * (2.0 * std::f64::consts::PI * freq * i as f64 / sr).sin())
                .collect(),
            TARGET_SAMPLE_RATE,
        )
    }

    #[test]
    fn noise_is_flat_and_tones_are_not() {
        let noise = extract_features(&white_noise(1.0, 3)).unwrap();
        let tone = extract_features(&sine(440.0, 1.0)).unwrap();
        assert!(noise.get("spectral_flatness").unwrap() >= 0.9);
        assert!(tone.get("spectral_flatness").unwrap() <= 0.05);
    }

    #[test]
    fn gain_invariance_of_flatness_and_entropy() {
        let w = white_noise(0.5, 4);
        let loud = Waveform::new(w.samples.iter().map(|s| s * 0.5).collect(), w.sample_rate);
        let a = extract_features(&w).unwrap();
        let b = extract_features(&loud).unwrap();
        assert!(
            (a.get("spectral_flatness").unwrap() - b.get("spectral_flatness").unwrap()).abs()
                < 1e-9
        );
        assert!(
            (a.get("spectral_entropy").unwrap() - b.get("spectral_entropy").unwrap()).abs() < 1e-9
        );
    }

    #[test]
    fn silence_marks_voice_features_missing_without_nans() {
        let w = Waveform::new(vec![0.0; 16_000], TARGET_SAMPLE_RATE);
        let f = extract_features(&w).unwrap();
        assert!(f.get("f0_mean").is_none());
        assert!(f.get("hnr_db").is_none());
        assert_eq!(f.get("nonspeech_ratio"), Some(1.0));
        for v in f.row().into_iter().flatten() {
            assert!(v.is_finite());
        }
    }

    #[test]
    fn row_order_matches_the_column_contract() {
        let f = extract_features(&sine(200.0, 0.6)).unwrap();
        let row = f.row();
        assert_eq!(row.len(), FEATURE_COLUMNS.len());
        let centroid_idx = FEATURE_COLUMNS
            .iter()
            .position(|&c| c == "spectral_centroid")
            .unwrap();
        assert_eq!(row[centroid_idx], f.get("spectral_centroid"));
    }
}
