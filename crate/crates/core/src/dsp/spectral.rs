use super::stft::FramedSpectra;
use crate::error::{CoreError, Result};

/// Distribution statistics of one magnitude spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralStats {
    pub centroid_hz: f64,
    pub spread_hz: f64,
    pub skew: f64,
    pub kurtosis: f64,
    /// Entropy of the normalized spectrum, divided by log F so it lands in [0, 1].
    pub entropy: f64,
    /// Geometric mean / arithmetic mean of the magnitudes.
    pub flatness: f64,
    /// Peak / mean of the magnitudes, always >= 1.
    pub crest: f64,
}

/// Statistics of a single magnitude row. Returns `None` for an all-zero
/// frame, which callers exclude from utterance aggregation.
pub fn spectral_stats(magnitudes: &[f64], bin_freqs: &[f64]) -> Option<SpectralStats> {
    assert_eq!(magnitudes.len(), bin_freqs.len());
    let total: f64 = magnitudes.iter().sum();
    if total <= 0.0 || magnitudes.is_empty() {
        return None;
    }
    let f = magnitudes.len() as f64;
    let mean = total / f;

    let centroid = magnitudes
        .iter()
        .zip(bin_freqs)
        .map(|(&m, &fr)| m * fr)
        .sum::<f64>()
        / total;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for (&m, &fr) in magnitudes.iter().zip(bin_freqs) {
        let d = fr - centroid;
        let p = m / total;
        m2 += p * d * d;
        m3 += p * d * d * d;
        m4 += p * d * d * d * d;
    }
    let spread = m2.sqrt();
    let (skew, kurtosis) = if spread > 0.0 {
        (m3 / (spread * spread * spread), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };

    // A true zero magnitude sends the geometric mean (and a point mass
    // sends the entropy) to exactly zero; no floor here.
    let mut log_sum = 0.0;
    let mut entropy = 0.0;
    let mut has_zero = false;
    let mut peak = 0.0f64;
    for &m in magnitudes {
        peak = peak.max(m);
        if m > 0.0 {
            log_sum += m.ln();
            let p = m / total;
            entropy -= p * p.ln();
        } else {
            has_zero = true;
        }
    }
    let flatness = if has_zero {
        0.0
    } else {
        ((log_sum / f).exp() / mean).min(1.0)
    };
    let entropy_norm = if magnitudes.len() > 1 {
        entropy / f.ln()
    } else {
        0.0
    };

    Some(SpectralStats {
        centroid_hz: centroid,
        spread_hz: spread,
        skew,
        kurtosis,
        entropy: entropy_norm.clamp(0.0, 1.0),
        flatness,
        crest: peak / mean,
    })
}

/// Mean-square frame-to-frame spectral difference, optionally weighted by
/// attention scores.
///
/// With `T` frames there are `T - 1` differences; an attention vector of
/// length `T` pairs weight `t` with the difference from frame `t` to
/// `t + 1` (its last entry is unused), and a vector of length `T - 1` is
/// used as-is. The `1/T` prefactor applies in both cases, so a uniform
/// all-ones attention reproduces the unweighted value exactly.
pub fn spectral_flux(spectra: &FramedSpectra, attention: Option<&[f64]>) -> Result<f64> {
    let t_frames = spectra.num_frames();
    let f_bins = spectra.num_bins() as f64;
    if t_frames < 2 {
        return Err(CoreError::Input(
            "spectral flux needs at least two frames".into(),
        ));
    }
    let weights: Vec<f64> = match attention {
        None => vec![1.0; t_frames - 1],
        Some(a) => {
            if a.len() != t_frames && a.len() != t_frames - 1 {
                return Err(CoreError::Input(format!(
                    "attention length {} does not match {} frames (expected {} or {})",
                    a.len(),
                    t_frames,
                    t_frames,
                    t_frames - 1
                )));
            }
            if a.iter().any(|&w| w < 0.0) {
                return Err(CoreError::Input("attention weights must be >= 0".into()));
            }
            a[..t_frames - 1].to_vec()
        }
    };
    let mut acc = 0.0;
    for t in 0..t_frames - 1 {
        let cur = spectra.frames.row(t);
        let next = spectra.frames.row(t + 1);
        let sq: f64 = cur
            .iter()
            .zip(next.iter())
            .map(|(&a, &b)| (b - a) * (b - a))
            .sum();
        acc += weights[t] / f_bins * sq;
    }
    Ok(acc / t_frames as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    fn spectra_from(rows: Vec<Vec<f64>>) -> FramedSpectra {
        FramedSpectra {
            frames: Matrix::from_rows(rows).unwrap(),
            window_s: 0.025,
            hop_s: 0.010,
            sample_rate: 16_000,
            fft_size: 512,
        }
    }

    #[test]
    fn flat_spectrum_is_maximally_flat() {
        let freqs: Vec<f64> = (0..32).map(|k| k as f64 * 31.25).collect();
        let s = spectral_stats(&vec![0.7; 32], &freqs).unwrap();
        assert!((s.flatness - 1.0).abs() < 1e-12);
        assert!((s.crest - 1.0).abs() < 1e-12);
        assert!((s.entropy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_statistics() {
        let freqs: Vec<f64> = (0..16).map(|k| k as f64 * 100.0).collect();
        let mut mags = vec![0.0; 16];
        mags[5] = 3.0;
        let s = spectral_stats(&mags, &freqs).unwrap();
        assert_eq!(s.flatness, 0.0);
        assert_eq!(s.entropy, 0.0);
        assert!((s.centroid_hz - 500.0).abs() < 1e-9);
        assert_eq!(s.spread_hz, 0.0);
    }

    #[test]
    fn all_zero_frame_is_missing() {
        let freqs = vec![0.0, 100.0];
        assert!(spectral_stats(&[0.0, 0.0], &freqs).is_none());
    }

    #[test]
    fn identical_frames_have_zero_flux() {
        let s = spectra_from(vec![vec![1.0, 2.0, 3.0]; 4]);
        assert_eq!(spectral_flux(&s, None).unwrap(), 0.0);
    }

    #[test]
    fn two_frame_unit_step_is_half() {
        // S1 = 0, S2 = 1 everywhere: (1/2) * (1/F) * F * 1 = 0.5 exactly.
        let s = spectra_from(vec![vec![0.0; 7], vec![1.0; 7]]);
        assert_eq!(spectral_flux(&s, None).unwrap(), 0.5);
    }

    #[test]
    fn all_ones_attention_equals_unweighted() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|t| (0..6).map(|k| ((t * 6 + k) as f64 * 0.13).sin()).collect())
            .collect();
        let s = spectra_from(rows);
        let plain = spectral_flux(&s, None).unwrap();
        let ones = vec![1.0; 5];
        assert_eq!(spectral_flux(&s, Some(&ones)).unwrap(), plain);
        let ones_short = vec![1.0; 4];
        assert_eq!(spectral_flux(&s, Some(&ones_short)).unwrap(), plain);
    }

    #[test]
    fn bad_attention_length_is_rejected() {
        let s = spectra_from(vec![vec![0.0; 4]; 3]);
        assert!(spectral_flux(&s, Some(&[1.0])).is_err());
    }
}
