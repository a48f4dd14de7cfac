//! Deterministic synthetic corpora with planted ground truth.
//!
//! Each sample is a T x N embedding sequence: quiet noise everywhere except
//! a contiguous span where sparse signed factor components are added along
//! orthonormal directions. Labels derive from a factor threshold, every
//! speaker gets a small constant offset vector, and all randomness comes
//! from per-sample streams of one seed, so generation is order-independent
//! and bit-reproducible.

mod signals;

pub use signals::{generate_test_signal, wav_sample, TestSignal};

use crate::error::{CoreError, Result};
use crate::io::{Label, Language, SampleMeta, Sex};
use crate::mix_seed;
use crate::tensor::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub enum LabelRule {
    /// PD when the (signed) intensity of `factor` exceeds `threshold`.
    FactorThreshold { factor: usize, threshold: f64 },
    /// Labels are independent coin flips: nothing to learn.
    Random,
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_speakers: usize,
    pub samples_per_speaker: usize,
    pub t_range: (usize, usize),
    pub n_dims: usize,
    pub k_factors: usize,
    /// Probability a factor is active in a sample.
    pub factor_sparsity: f64,
    /// Magnitude range of active intensities.
    pub intensity_range: (f64, f64),
    /// Scale of a factor component inside its span.
    pub factor_gain: f64,
    /// Per-factor gain falloff: factor `f` uses `factor_gain * decay^f`.
    /// Distinct variances keep the planted basis identifiable.
    pub factor_gain_decay: f64,
    /// Active intensities take a random sign.
    pub signed_factors: bool,
    /// Fraction of frames covered by the factor span.
    pub span_frac: f64,
    pub noise_std: f64,
    pub speaker_offset_std: f64,
    pub label_rule: LabelRule,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_speakers: 32,
            samples_per_speaker: 8,
            t_range: (30, 50),
            n_dims: 64,
            k_factors: 4,
            factor_sparsity: 0.6,
            intensity_range: (0.5, 1.5),
            factor_gain: 4.0,
            factor_gain_decay: 1.0,
            signed_factors: true,
            span_frac: 0.4,
            noise_std: 0.1,
            speaker_offset_std: 0.05,
            label_rule: LabelRule::FactorThreshold {
                factor: 0,
                threshold: 0.25,
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthSample {
    pub meta: SampleMeta,
    pub frames: Matrix,
    /// Raw signed factor intensities.
    pub factor_intensities: Vec<f64>,
    /// What each factor contributes to the frame-mean pooled vector:
    /// `gain * intensity * span_len / T`. Projection onto the matching
    /// direction recovers exactly this value (plus noise).
    pub pooled_coefficients: Vec<f64>,
    pub span: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub samples: Vec<SynthSample>,
    /// k x N orthonormal factor directions.
    pub directions: Matrix,
}

impl SynthCorpus {
    /// Frame-mean pooled vector per sample (S x N).
    pub fn mean_pooled(&self) -> Matrix {
        let n = self.samples[0].frames.cols();
        let mut out = Matrix::zeros(self.samples.len(), n);
        for (s, sample) in self.samples.iter().enumerate() {
            let t = sample.frames.rows() as f64;
            for ti in 0..sample.frames.rows() {
                for (j, &v) in sample.frames.row(ti).iter().enumerate() {
                    let cur = out.at(s, j);
                    out.set(s, j, cur + v / t);
                }
            }
        }
        out
    }

    /// Deterministic split: each speaker contributes samples to the test
    /// side on a running quota, so the split hits `test_frac` per speaker
    /// as closely as the sample count allows.
    pub fn train_test_split(&self, test_frac: f64) -> (Vec<usize>, Vec<usize>) {
        let frac = test_frac.clamp(0.0, 0.5);
        let mut train = Vec::new();
        let mut test = Vec::new();
        let mut per_speaker: std::collections::BTreeMap<&str, usize> = Default::default();
        for (i, sample) in self.samples.iter().enumerate() {
            let count = per_speaker.entry(sample.meta.speaker.as_str()).or_insert(0);
            let quota_before = (*count as f64 * frac).floor();
            let quota_after = ((*count + 1) as f64 * frac).floor();
            if quota_after > quota_before {
                test.push(i);
            } else {
                train.push(i);
            }
            *count += 1;
        }
        (train, test)
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Orthonormal rows via Gram-Schmidt over seeded Gaussian draws.
fn orthonormal_directions(k: usize, n: usize, seed: u64) -> Result<Matrix> {
    if k > n {
        return Err(CoreError::Config(format!("{k} factors exceed {n} dims")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xd1));
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    while rows.len() < k {
        let mut candidate: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        for prev in &rows {
            let dot: f64 = candidate.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (c, p) in candidate.iter_mut().zip(prev) {
                *c -= dot * p;
            }
        }
        let norm = candidate.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue; // essentially impossible, but never divide by ~0
        }
        for c in candidate.iter_mut() {
            *c /= norm;
        }
        rows.push(candidate);
    }
    Matrix::from_rows(rows)
}

fn speaker_meta(speaker_idx: usize) -> (Language, Sex) {
    let language = if speaker_idx % 2 == 0 {
        Language::Fr
    } else {
        Language::En
    };
    let sex = if (speaker_idx / 2) % 2 == 0 { Sex::M } else { Sex::F };
    (language, sex)
}

pub fn generate_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    if cfg.n_speakers == 0 || cfg.samples_per_speaker == 0 || cfg.n_dims == 0 {
        return Err(CoreError::Config("empty corpus configuration".into()));
    }
    if cfg.t_range.0 < 1 || cfg.t_range.1 < cfg.t_range.0 {
        return Err(CoreError::Config("bad t_range".into()));
    }
    if !(0.0..=1.0).contains(&cfg.factor_sparsity) || !(0.0..=1.0).contains(&cfg.span_frac) {
        return Err(CoreError::Config("probabilities must be in [0, 1]".into()));
    }
    let directions = orthonormal_directions(cfg.k_factors.max(1), cfg.n_dims, cfg.seed)?;

    let offsets: Vec<Vec<f64>> = (0..cfg.n_speakers)
        .map(|spk| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x0f00 + spk as u64));
            (0..cfg.n_dims)
                .map(|_| cfg.speaker_offset_std * normal(&mut rng))
                .collect()
        })
        .collect();

    let total = cfg.n_speakers * cfg.samples_per_speaker;
    let mut samples = Vec::with_capacity(total);
    for idx in 0..total {
        let speaker_idx = idx / cfg.samples_per_speaker;
        let (language, sex) = speaker_meta(speaker_idx);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x1_0000 + idx as u64));

        let t = rng.random_range(cfg.t_range.0..=cfg.t_range.1);
        let span_len = ((cfg.span_frac * t as f64).round() as usize).clamp(1, t);
        let span_start = rng.random_range(0..=t - span_len);

        let mut intensities = vec![0.0; cfg.k_factors];
        for value in intensities.iter_mut() {
            if rng.random::<f64>() < cfg.factor_sparsity {
                let magnitude = rng.random_range(cfg.intensity_range.0..cfg.intensity_range.1);
                let sign = if cfg.signed_factors && rng.random::<f64>() < 0.5 {
                    -1.0
                } else {
                    1.0
                };
                *value = sign * magnitude;
            }
        }

        let label = match cfg.label_rule {
            LabelRule::FactorThreshold { factor, threshold } => {
                let v = intensities.get(factor).copied().unwrap_or(0.0);
                if v > threshold {
                    Label::Pd
                } else {
                    Label::Hc
                }
            }
            LabelRule::Random => {
                if rng.random::<f64>() < 0.5 {
                    Label::Pd
                } else {
                    Label::Hc
                }
            }
        };

        let mut frames = Matrix::zeros(t, cfg.n_dims);
        let offset = &offsets[speaker_idx];
        for ti in 0..t {
            let in_span = ti >= span_start && ti < span_start + span_len;
            let noise_scale = if in_span { cfg.noise_std } else { 0.1 * cfg.noise_std };
            let row = frames.row_mut(ti);
            for (j, r) in row.iter_mut().enumerate() {
                *r = offset[j] + noise_scale * normal(&mut rng);
            }
            if in_span {
                for (f, &intensity) in intensities.iter().enumerate() {
                    if intensity != 0.0 {
                        let scale = cfg.factor_gain * cfg.factor_gain_decay.powi(f as i32) * intensity;
                        for (j, r) in row.iter_mut().enumerate() {
                            *r += scale * directions.at(f, j);
                        }
                    }
                }
            }
        }

        let pooled_coefficients: Vec<f64> = intensities
            .iter()
            .enumerate()
            .map(|(f, &i)| {
                cfg.factor_gain * cfg.factor_gain_decay.powi(f as i32) * i * span_len as f64
                    / t as f64
            })
            .collect();

        samples.push(SynthSample {
            meta: SampleMeta {
                id: format!("s{idx:04}"),
                speaker: format!("spk{speaker_idx:03}"),
                label,
                language,
                sex,
            },
            frames,
            factor_intensities: intensities,
            pooled_coefficients,
            span: (span_start, span_start + span_len),
        });
    }
    Ok(SynthCorpus {
        samples,
        directions,
    })
}

/// Feature columns for an embedding corpus: one monotone proxy per factor
/// (coupled to the realized pooled coefficient) plus independent noise
/// columns, so the correlation pipeline has planted positives and true
/// nulls.
pub fn planted_feature_columns(
    corpus: &SynthCorpus,
    n_noise: usize,
    seed: u64,
) -> Vec<(String, Vec<Option<f64>>)> {
    let k = corpus.directions.rows();
    let mut columns = Vec::new();
    for f in 0..k {
        let values: Vec<Option<f64>> = corpus
            .samples
            .iter()
            .enumerate()
            .map(|(idx, s)| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x2_0000 + (idx * k + f) as u64));
                Some(s.pooled_coefficients[f] + 0.02 * normal(&mut rng))
            })
            .collect();
        columns.push((format!("factor{f}_proxy"), values));
    }
    for c in 0..n_noise {
        let values: Vec<Option<f64>> = (0..corpus.samples.len())
            .map(|idx| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x3_0000 + (idx * n_noise + c) as u64));
                Some(normal(&mut rng))
            })
            .collect();
        columns.push((format!("noise{c}"), values));
    }
    columns
}
