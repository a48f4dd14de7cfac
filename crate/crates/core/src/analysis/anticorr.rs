use super::Undefined;
use crate::dsp::moving_average;
use crate::error::{CoreError, Result};

/// Settings for the attention/energy comparison.
#[derive(Debug, Clone, Copy)]
pub struct AnticorrConfig {
    pub smooth_window_frames: usize,
    /// "Active" means above this fraction of the signal's own maximum.
    pub active_threshold_rel: f64,
    pub max_lag_frames: usize,
}

impl Default for AnticorrConfig {
    fn default() -> Self {
        AnticorrConfig {
            smooth_window_frames: 5,
            active_threshold_rel: 0.05,
            max_lag_frames: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XcorrResult {
    /// Correlation of the two binary series at lag zero.
    pub r0: f64,
    /// (lag, correlation) pairs when a lag sweep was requested; lags where
    /// either overlapping series is constant are omitted.
    pub lag_curve: Vec<(i64, f64)>,
}

/// Smooth both series, binarize each at `active_threshold_rel` of its own
/// maximum, and correlate the binary series.
///
/// The correlation of two binary series is the phi coefficient, computed
/// here from integer counts so the complementary-mask case comes out as
/// exactly -1. Thresholding relative to each signal's max makes the whole
/// statistic invariant to positive rescaling of either input.
pub fn attention_energy_xcorr(
    attention: &[f64],
    energy: &[f64],
    cfg: &AnticorrConfig,
) -> Result<std::result::Result<XcorrResult, Undefined>> {
    if attention.len() != energy.len() {
        return Err(CoreError::Input(format!(
            "attention has {} frames, energy {}",
            attention.len(),
            energy.len()
        )));
    }
    if attention.len() < cfg.smooth_window_frames.max(2) {
        return Err(CoreError::Input(format!(
            "need at least {} frames, got {}",
            cfg.smooth_window_frames.max(2),
            attention.len()
        )));
    }
    if !(0.0..1.0).contains(&cfg.active_threshold_rel) || cfg.active_threshold_rel <= 0.0 {
        return Err(CoreError::Config(
            "active threshold must be in (0, 1)".into(),
        ));
    }

    let att = binarize(&moving_average(attention, cfg.smooth_window_frames), cfg);
    let eng = binarize(&moving_average(energy, cfg.smooth_window_frames), cfg);

    if constant(&att) {
        return Ok(Err(Undefined::ConstantSeries("attention")));
    }
    if constant(&eng) {
        return Ok(Err(Undefined::ConstantSeries("energy")));
    }

    let r0 = phi(&att, &eng).expect("non-constant series checked above");
    let mut lag_curve = Vec::new();
    if cfg.max_lag_frames > 0 {
        let max_lag = cfg.max_lag_frames as i64;
        for lag in -max_lag..=max_lag {
            let (a, e) = overlap(&att, &eng, lag);
            if let Some(r) = phi(&a, &e) {
                lag_curve.push((lag, r));
            }
        }
    }
    Ok(Ok(XcorrResult { r0, lag_curve }))
}

fn binarize(values: &[f64], cfg: &AnticorrConfig) -> Vec<bool> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return vec![false; values.len()];
    }
    let threshold = cfg.active_threshold_rel * max;
    values.iter().map(|&v| v > threshold).collect()
}

fn constant(bits: &[bool]) -> bool {
    bits.iter().all(|&b| b) || bits.iter().all(|&b| !b)
}

/// Phi coefficient from the 2x2 contingency counts; exact in the
/// complementary and identical cases. `None` when either margin is
/// degenerate.
fn phi(x: &[bool], y: &[bool]) -> Option<f64> {
    let n = x.len() as u128;
    if n == 0 {
        return None;
    }
    let n1x = x.iter().filter(|&&b| b).count() as u128;
    let n1y = y.iter().filter(|&&b| b).count() as u128;
    let n11 = x.iter().zip(y).filter(|(&a, &b)| a && b).count() as u128;
    if n1x == 0 || n1x == n || n1y == 0 || n1y == n {
        return None;
    }
    let num = n as i128 * n11 as i128 - n1x as i128 * n1y as i128;
    let den_sq = n1x * (n - n1x) * n1y * (n - n1y);
    Some(num as f64 / (den_sq as f64).sqrt())
}

fn overlap(x: &[bool], y: &[bool], lag: i64) -> (Vec<bool>, Vec<bool>) {
    // pair x[t] with y[t + lag]
    let n = x.len() as i64;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for t in 0..n {
        let u = t + lag;
        if u >= 0 && u < n {
            a.push(x[t as usize]);
            b.push(y[u as usize]);
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_smoothing() -> AnticorrConfig {
        AnticorrConfig {
            smooth_window_frames: 1,
            ..AnticorrConfig::default()
        }
    }

    #[test]
    fn complementary_masks_are_exactly_minus_one() {
        let att: Vec<f64> = (0..40).map(|i| if i < 13 { 1.0 } else { 0.0 }).collect();
        let eng: Vec<f64> = att.iter().map(|&a| 1.0 - a).collect();
        let r = attention_energy_xcorr(&att, &eng, &no_smoothing())
            .unwrap()
            .unwrap();
        assert_eq!(r.r0, -1.0);
    }

    #[test]
    fn identical_series_are_exactly_plus_one() {
        let att: Vec<f64> = (0..30).map(|i| if i % 7 < 3 { 0.9 } else { 0.0 }).collect();
        let r = attention_energy_xcorr(&att, &att, &no_smoothing())
            .unwrap()
            .unwrap();
        assert_eq!(r.r0, 1.0);
    }

    #[test]
    fn attention_planted_in_pauses_is_strongly_negative() {
        // speech bursts with pauses; attention mass sits in the pauses
        let mut energy = Vec::new();
        let mut attention = Vec::new();
        for block in 0..6 {
            let speech = block % 2 == 0;
            for i in 0..25 {
                let e = if speech { 0.6 + 0.01 * (i as f64).sin() } else { 0.002 };
                energy.push(e);
                attention.push(if speech { 0.001 } else { 0.04 + 0.001 * (i % 3) as f64 });
            }
        }
        let r = attention_energy_xcorr(&attention, &energy, &AnticorrConfig::default())
            .unwrap()
            .unwrap();
        assert!(r.r0 < -0.5, "r0 = {}", r.r0);
    }

    #[test]
    fn rescaling_either_signal_changes_nothing() {
        let att: Vec<f64> = (0..50)
            .map(|i| if i % 9 < 4 { 0.2 + 0.01 * (i % 4) as f64 } else { 0.001 })
            .collect();
        let eng: Vec<f64> = (0..50)
            .map(|i| if (i + 3) % 7 < 3 { 0.5 } else { 0.002 })
            .collect();
        let base = attention_energy_xcorr(&att, &eng, &AnticorrConfig::default())
            .unwrap()
            .unwrap();
        // power-of-two scales keep every float product exact
        let att_scaled: Vec<f64> = att.iter().map(|v| v * 32.0).collect();
        let eng_scaled: Vec<f64> = eng.iter().map(|v| v * 0.03125).collect();
        let scaled = attention_energy_xcorr(&att_scaled, &eng_scaled, &AnticorrConfig::default())
            .unwrap()
            .unwrap();
        assert_eq!(base.r0, scaled.r0);
    }

    #[test]
    fn constant_series_is_flagged_undefined() {
        let att = vec![1.0; 20];
        let eng: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { 0.0 }).collect();
        let out = attention_energy_xcorr(&att, &eng, &no_smoothing()).unwrap();
        assert_eq!(out, Err(Undefined::ConstantSeries("attention")));
    }

    #[test]
    fn lag_sweep_covers_the_requested_range() {
        let att: Vec<f64> = (0..60).map(|i| if i % 10 < 4 { 1.0 } else { 0.0 }).collect();
        let eng: Vec<f64> = (0..60).map(|i| if (i + 2) % 10 < 4 { 1.0 } else { 0.0 }).collect();
        let cfg = AnticorrConfig {
            max_lag_frames: 3,
            smooth_window_frames: 1,
            ..AnticorrConfig::default()
        };
        let r = attention_energy_xcorr(&att, &eng, &cfg).unwrap().unwrap();
        assert_eq!(r.lag_curve.len(), 7);
        // the +2 shifted copy correlates best at lag -2
        let best = r
            .lag_curve
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert_eq!(best.0, -2);
    }
}
