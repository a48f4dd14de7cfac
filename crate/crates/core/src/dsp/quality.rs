use super::fft::{fft_in_place, ifft_in_place, next_pow2};
use super::pitch::F0Track;
use super::Waveform;

/// Voice-quality measures; `None` marks a feature as missing (unvoiced or
/// otherwise uncomputable input).
#[derive(Debug, Clone, Copy, Default)]
pub struct VoiceQuality {
    pub hnr_db: Option<f64>,
    pub jitter_local: Option<f64>,
    pub shimmer_local: Option<f64>,
    pub gne: Option<f64>,
}

/// Band layout for the glottal-to-noise excitation ratio.
#[derive(Debug, Clone, Copy)]
pub struct GneConfig {
    pub band_width_hz: f64,
    pub band_step_hz: f64,
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    /// Minimum center separation for a band pair to count.
    pub min_center_gap_hz: f64,
}

impl Default for GneConfig {
    fn default() -> Self {
        GneConfig {
            band_width_hz: 1000.0,
            band_step_hz: 500.0,
            f_lo_hz: 300.0,
            f_hi_hz: 3400.0,
            min_center_gap_hz: 1000.0,
        }
    }
}

const HNR_CORR_CAP: f64 = 1.0 - 1e-6;
/// Jitter and shimmer need this many consecutive voiced frames.
const MIN_VOICED_RUN: usize = 3;

/// Harmonic-to-noise ratio, jitter, shimmer, and GNE from a waveform and its
/// F0 track. Every measure is missing when the signal lacks a voiced run.
pub fn voice_quality(w: &Waveform, track: &F0Track) -> VoiceQuality {
    voice_quality_with(w, track, GneConfig::default())
}

pub fn voice_quality_with(w: &Waveform, track: &F0Track, gne_cfg: GneConfig) -> VoiceQuality {
    let voiced_idx: Vec<usize> = (0..track.voiced.len()).filter(|&i| track.voiced[i]).collect();
    if voiced_idx.is_empty() {
        return VoiceQuality::default();
    }

    // HNR: per-frame 10 log10(r / (1 - r)), averaged over voiced frames.
    let hnr_db = {
        let mut acc = 0.0;
        for &i in &voiced_idx {
            let r = track.peak_corr[i].clamp(0.0, HNR_CORR_CAP);
            acc += 10.0 * (r / (1.0 - r)).log10();
        }
        Some(acc / voiced_idx.len() as f64)
    };

    let longest_run = longest_voiced_run(&track.voiced);
    let (jitter, shimmer) = if longest_run >= MIN_VOICED_RUN {
        (jitter_local(track), shimmer_local(w, track))
    } else {
        (None, None)
    };

    let gne = gne_ratio(w, gne_cfg);

    VoiceQuality {
        hnr_db,
        jitter_local: jitter,
        shimmer_local: shimmer,
        gne,
    }
}

fn longest_voiced_run(voiced: &[bool]) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for &v in voiced {
        if v {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// Mean absolute difference of consecutive period lengths over mean period,
/// using frame-level periods from the F0 track within voiced runs.
fn jitter_local(track: &F0Track) -> Option<f64> {
    let sr_free_periods: Vec<Option<f64>> = track
        .f0_hz
        .iter()
        .zip(&track.voiced)
        .map(|(&f, &v)| if v && f > 0.0 { Some(1.0 / f) } else { None })
        .collect();
    let mut diff_sum = 0.0;
    let mut diff_count = 0usize;
    let mut period_sum = 0.0;
    let mut period_count = 0usize;
    for pair in sr_free_periods.windows(2) {
        if let (Some(a), Some(b)) = (pair[0], pair[1]) {
            diff_sum += (b - a).abs();
            diff_count += 1;
        }
    }
    for p in sr_free_periods.into_iter().flatten() {
        period_sum += p;
        period_count += 1;
    }
    if diff_count == 0 || period_count == 0 || period_sum <= 0.0 {
        return None;
    }
    let mean_period = period_sum / period_count as f64;
    Some(diff_sum / diff_count as f64 / mean_period)
}

/// Mean absolute difference of consecutive per-period peak amplitudes over
/// mean peak amplitude. Periods are segmented inside each voiced frame from
/// that frame's period estimate, then per-frame values are averaged.
fn shimmer_local(w: &Waveform, track: &F0Track) -> Option<f64> {
    let sr = w.sample_rate as f64;
    let mut per_frame = Vec::new();
    for (i, (&f0, &v)) in track.f0_hz.iter().zip(&track.voiced).enumerate() {
        if !v || f0 <= 0.0 {
            continue;
        }
        let period = (sr / f0).round() as usize;
        if period == 0 {
            continue;
        }
        let start = i * track.hop_len;
        let frame = &w.samples[start..(start + track.frame_len).min(w.samples.len())];
        let peaks: Vec<f64> = frame
            .chunks_exact(period)
            .map(|cycle| cycle.iter().fold(0.0f64, |m, &s| m.max(s.abs())))
            .collect();
        if peaks.len() < 2 {
            continue;
        }
        let mean_peak = peaks.iter().sum::<f64>() / peaks.len() as f64;
        if mean_peak <= 0.0 {
            continue;
        }
        let mean_diff = peaks
            .windows(2)
            .map(|p| (p[1] - p[0]).abs())
            .sum::<f64>()
            / (peaks.len() - 1) as f64;
        per_frame.push(mean_diff / mean_peak);
    }
    if per_frame.is_empty() {
        None
    } else {
        Some(per_frame.iter().sum::<f64>() / per_frame.len() as f64)
    }
}

/// Glottal-to-noise excitation ratio: maximum correlation between Hilbert
/// envelopes of well-separated frequency bands. Near-zero band energy makes
/// the ratio meaningless, so it reports missing in that case.
fn gne_ratio(w: &Waveform, cfg: GneConfig) -> Option<f64> {
    let n = w.samples.len();
    if n < 64 {
        return None;
    }
    let size = next_pow2(n);
    let sr = w.sample_rate as f64;

    let mut centers = Vec::new();
    let mut lo = cfg.f_lo_hz;
    while lo + cfg.band_width_hz <= cfg.f_hi_hz + 1e-9 {
        centers.push(lo + cfg.band_width_hz / 2.0);
        lo += cfg.band_step_hz;
    }
    if centers.len() < 2 {
        return None;
    }

    let mut base_re = vec![0.0; size];
    base_re[..n].copy_from_slice(&w.samples);
    let mut base_im = vec![0.0; size];
    fft_in_place(&mut base_re, &mut base_im);

    let mut envelopes: Vec<Vec<f64>> = Vec::with_capacity(centers.len());
    for &center in &centers {
        let band_lo = center - cfg.band_width_hz / 2.0;
        let band_hi = center + cfg.band_width_hz / 2.0;
        let mut re = vec![0.0; size];
        let mut im = vec![0.0; size];
        // analytic band signal: keep positive-frequency bins inside the band,
        // doubled; negative frequencies zeroed.
        for k in 1..size / 2 {
            let freq = k as f64 * sr / size as f64;
            if freq >= band_lo && freq <= band_hi {
                re[k] = 2.0 * base_re[k];
                im[k] = 2.0 * base_im[k];
            }
        }
        ifft_in_place(&mut re, &mut im);
        let env: Vec<f64> = (0..n).map(|i| (re[i] * re[i] + im[i] * im[i]).sqrt()).collect();
        envelopes.push(env);
    }

    let mut best: Option<f64> = None;
    for i in 0..envelopes.len() {
        for j in i + 1..envelopes.len() {
            if (centers[j] - centers[i]).abs() + 1e-9 < cfg.min_center_gap_hz {
                continue;
            }
            if let Some(r) = pearson(&envelopes[i], &envelopes[j]) {
                let r = r.clamp(0.0, 1.0);
                best = Some(best.map_or(r, |b: f64| b.max(r)));
            }
        }
    }
    best
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y.iter()) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx < 1e-12 || syy < 1e-12 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
