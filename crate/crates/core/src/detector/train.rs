use super::evaluate::{evaluate, EvalReport};
use super::head::{bce_dlogit, bce_loss, ClassifierHead, HeadGrads, HEAD_PARAM_NAMES};
use super::sampler::{sample_weights, BalancedSampler};
use super::{plain_frames, CorpusSample, SampleSource, ENCODER_MELS};
use crate::dsp::{augment, filterbank_encoder, AugmentConfig};
use crate::error::{CoreError, Result};
use crate::io::Label;
use crate::mix_seed;
use crate::par;
use crate::tensor::{adam_step, lr_at, AdamState, LrSchedule, Matrix, ParamSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Training recipe for the detection head.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr_peak: f64,
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub samples_per_epoch: usize,
    pub batch: usize,
    pub weight_majority: f64,
    pub weight_minority: f64,
    pub hidden: usize,
    pub hidden2: usize,
    pub augment: AugmentConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_peak: 1e-4,
            epochs: 20,
            warmup_epochs: 2,
            samples_per_epoch: 1024,
            batch: 32,
            weight_majority: 0.7,
            weight_minority: 1.5,
            hidden: 64,
            hidden2: 32,
            augment: AugmentConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub loss: f64,
    pub f1: Option<f64>,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub head: ClassifierHead,
    pub history: Vec<EpochStats>,
    pub final_train_eval: EvalReport,
}

// rng stream tags
const TAG_SAMPLER: u64 = 0x5a;
const TAG_DROPOUT: u64 = 0xd0;
const TAG_AUGMENT: u64 = 0xa6;

/// Train the detection head.
///
/// Deterministic for a fixed config and seed: the sampler and the per-batch
/// augmentation gate draw from one sequential stream, per-sample dropout
/// and noise streams are derived from (seed, step, slot), and batch
/// gradients are summed in slot order regardless of how many worker
/// threads computed them.
pub fn train_detector(
    corpus: &[CorpusSample],
    cfg: &TrainConfig,
    parallel: bool,
) -> Result<TrainOutcome> {
    if corpus.is_empty() {
        return Err(CoreError::Input("empty corpus".into()));
    }
    let metas: Vec<_> = corpus.iter().map(|s| s.meta.clone()).collect();
    let has_pd = metas.iter().any(|m| m.label == Label::Pd);
    let has_hc = metas.iter().any(|m| m.label == Label::Hc);
    if !has_pd || !has_hc {
        return Err(CoreError::Config(
            "corpus must contain both PD and HC samples".into(),
        ));
    }
    if cfg.warmup_epochs > cfg.epochs {
        return Err(CoreError::Config(format!(
            "warmup_epochs {} exceeds epochs {}",
            cfg.warmup_epochs, cfg.epochs
        )));
    }
    let sampler = BalancedSampler::new(&metas)?;
    let weights = sample_weights(&metas, cfg.weight_majority, cfg.weight_minority);

    // Plain (never-augmented) frames, computed once.
    let plain: Vec<Matrix> = {
        let encoded = par::map_indexed(corpus, parallel, |_, s| plain_frames(&s.source));
        let mut out = Vec::with_capacity(encoded.len());
        for frames in encoded {
            out.push(frames?);
        }
        out
    };
    let width = plain[0].cols();
    if let Some(bad) = plain.iter().position(|f| f.cols() != width) {
        return Err(CoreError::dimension(
            "train_detector",
            format!("sample 0 width {width}"),
            format!("sample {bad} width {}", plain[bad].cols()),
        ));
    }
    let has_wav = corpus
        .iter()
        .any(|s| matches!(s.source, SampleSource::Wav(_)));

    let mut head = ClassifierHead::new(width, cfg.hidden, cfg.hidden2, cfg.seed);
    let mut adam: Vec<AdamState> = HEAD_PARAM_NAMES
        .iter()
        .map(|name| AdamState::new_like(head.param(name)))
        .collect();

    let steps_per_epoch = (cfg.samples_per_epoch / cfg.batch).max(1);
    let total_steps = (cfg.epochs * steps_per_epoch) as u64;
    let schedule = LrSchedule::warmup_cosine(
        cfg.lr_peak,
        (cfg.warmup_epochs * steps_per_epoch) as u64,
        total_steps,
    );

    let mut main_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, TAG_SAMPLER));
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step: u64 = 0;
    for _epoch in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        let mut confusion = [0usize; 4]; // tp, fp, fn, tn
        for _ in 0..steps_per_epoch {
            let batch: Vec<usize> = (0..cfg.batch).map(|_| sampler.draw(&mut main_rng)).collect();
            let augment_batch = has_wav && main_rng.random::<f64>() < cfg.augment.apply_probability;

            let per_sample: Vec<Result<(f64, f64, HeadGrads)>> =
                par::map_indexed(&batch, parallel, |slot, &idx| {
                    let sample = &corpus[idx];
                    let frames = if augment_batch {
                        if let SampleSource::Wav(w) = &sample.source {
                            let mut noise_rng = ChaCha8Rng::seed_from_u64(mix_seed(
                                cfg.seed ^ TAG_AUGMENT,
                                step * cfg.batch as u64 + slot as u64,
                            ));
                            let forced = AugmentConfig {
                                apply_probability: 1.0,
                                ..cfg.augment.clone()
                            };
                            filterbank_encoder(&augment(w, &forced, &mut noise_rng), ENCODER_MELS)?
                        } else {
                            plain[idx].clone()
                        }
                    } else {
                        plain[idx].clone()
                    };
                    let mut dropout_rng = ChaCha8Rng::seed_from_u64(mix_seed(
                        cfg.seed ^ TAG_DROPOUT,
                        step * cfg.batch as u64 + slot as u64,
                    ));
                    let (out, cache) = head.forward_train(&frames, &mut dropout_rng)?;
                    let y = if sample.meta.label == Label::Pd { 1.0 } else { 0.0 };
                    let w = weights[idx];
                    let loss = bce_loss(out.logit, y, w);
                    let mut grads = HeadGrads::zeros_like(&head);
                    head.backward(&frames, &cache, bce_dlogit(out.logit, y, w), &mut grads);
                    Ok((loss, out.prob, grads))
                });

            let mut total = HeadGrads::zeros_like(&head);
            let mut batch_loss = 0.0;
            let scale = 1.0 / cfg.batch as f64;
            for (slot, result) in per_sample.into_iter().enumerate() {
                let (loss, prob, grads) = result?;
                batch_loss += loss * scale;
                total.add_scaled(&grads, scale);
                let idx = batch[slot];
                let predicted_pd = prob >= 0.5;
                let actual_pd = corpus[idx].meta.label == Label::Pd;
                match (predicted_pd, actual_pd) {
                    (true, true) => confusion[0] += 1,
                    (true, false) => confusion[1] += 1,
                    (false, true) => confusion[2] += 1,
                    (false, false) => confusion[3] += 1,
                }
            }
            if !batch_loss.is_finite() {
                return Err(CoreError::Numeric(format!(
                    "training diverged at step {step}"
                )));
            }
            epoch_loss += batch_loss / steps_per_epoch as f64;

            head.w1.grad = total.w1;
            head.b1.grad = total.b1;
            head.attn_v.grad = total.attn_v;
            head.w2.grad = total.w2;
            head.b2.grad = total.b2;
            head.w_out.grad = total.w_out;
            head.b_out.grad = total.b_out;
            let lr = lr_at(&schedule, step);
            for (name, state) in HEAD_PARAM_NAMES.iter().zip(adam.iter_mut()) {
                adam_step(head.param_mut(name), state, lr, name)?;
            }
            head.zero_grads();
            step += 1;
        }
        let (tp, fp, fn_) = (confusion[0] as f64, confusion[1] as f64, confusion[2] as f64);
        let f1 = if tp + fn_ > 0.0 {
            Some(2.0 * tp / (2.0 * tp + fp + fn_))
        } else {
            None
        };
        history.push(EpochStats {
            loss: epoch_loss,
            f1,
        });
    }

    let eval_set: Vec<_> = metas.iter().cloned().zip(plain.iter().cloned()).collect();
    let final_train_eval = evaluate(&head, &eval_set)?;
    Ok(TrainOutcome {
        head,
        history,
        final_train_eval,
    })
}

/// Plain embedded frames for every corpus sample, in order.
pub fn corpus_frames(corpus: &[CorpusSample], parallel: bool) -> Result<Vec<Matrix>> {
    let encoded = par::map_indexed(corpus, parallel, |_, s| plain_frames(&s.source));
    encoded.into_iter().collect()
}
