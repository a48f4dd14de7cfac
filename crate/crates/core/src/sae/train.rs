use super::{
    decode, encode, fidelity_loss, loss_and_grad, relu_encode, tau_at, DictionaryActivation,
    SaeActivation, SaeGrads, SaeParams, TemperatureSchedule, SAE_PARAM_NAMES,
};
use crate::error::{CoreError, Result};
use crate::mix_seed;
use crate::par;
use crate::tensor::{adam_step, AdamState, Matrix, ParamSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SaeTrainConfig {
    pub lr: f64,
    pub lambda: f64,
    pub schedule: TemperatureSchedule,
    pub steps: u64,
    pub batch: usize,
    pub dict_size: usize,
    pub seed: u64,
    pub activation: SaeActivation,
    pub holdout_frac: f64,
    /// Decoder columns are rescaled to this norm after every step. Without
    /// it the value path absorbs scale and the decoder shrinks, which
    /// silently cancels the sparsity penalty (gates then idle half-open).
    pub decoder_norm: Option<f64>,
}

impl Default for SaeTrainConfig {
    fn default() -> Self {
        SaeTrainConfig {
            lr: 0.003,
            lambda: 0.001,
            schedule: TemperatureSchedule::default(),
            steps: 2000,
            batch: 32,
            dict_size: 64,
            seed: 0,
            activation: SaeActivation::Mask,
            holdout_frac: 0.2,
            decoder_norm: Some(1.0),
        }
    }
}

#[derive(Debug)]
pub struct SaeTrainOutcome {
    pub params: SaeParams,
    /// Mean reconstruction MSE on the held-out split at the final
    /// temperature.
    pub heldout_fidelity: f64,
    /// Mean number of active entries on the held-out split.
    pub mean_active: f64,
    pub train_indices: Vec<usize>,
    pub holdout_indices: Vec<usize>,
    pub final_train_loss: f64,
}

const TAG_SPLIT: u64 = 0x51;
const TAG_BATCH: u64 = 0xb1;

fn renormalize_decoder(params: &mut SaeParams, target: f64) {
    let k = params.dict_size();
    let n = params.input_width();
    for i in 0..k {
        let norm = params.w_d.value.col_norm(i);
        if norm > 1e-12 {
            let scale = target / norm;
            for j in 0..n {
                let v = params.w_d.value.at(j, i) * scale;
                params.w_d.value.set(j, i, v);
            }
        }
    }
}

/// Inference-time encode at the schedule's final temperature.
pub fn encode_inference(
    params: &SaeParams,
    x: &[f64],
    activation: SaeActivation,
    tau_end: f64,
) -> Result<DictionaryActivation> {
    match activation {
        SaeActivation::Mask => encode(params, x, tau_end),
        SaeActivation::Relu => relu_encode(params, x),
    }
}

/// Train a dictionary on pooled vectors (rows of `data`).
///
/// Adam at a constant learning rate, batches drawn with replacement from
/// the training split, gradients summed in slot order for bitwise
/// reproducibility. A 20% split is held out for the reported fidelity.
pub fn train_sae(data: &Matrix, cfg: &SaeTrainConfig, parallel: bool) -> Result<SaeTrainOutcome> {
    let samples = data.rows();
    if samples == 0 {
        return Err(CoreError::Input("no pooled vectors to train on".into()));
    }
    if cfg.batch == 0 || cfg.dict_size == 0 {
        return Err(CoreError::Config("batch and dict_size must be positive".into()));
    }

    // deterministic shuffled split
    let mut order: Vec<usize> = (0..samples).collect();
    let mut split_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, TAG_SPLIT));
    for i in (1..order.len()).rev() {
        let j = split_rng.random_range(0..=i);
        order.swap(i, j);
    }
    let holdout_count = if samples >= 2 {
        ((samples as f64 * cfg.holdout_frac).round() as usize).clamp(1, samples - 1)
    } else {
        0
    };
    let holdout_indices: Vec<usize> = order[..holdout_count].to_vec();
    let train_indices: Vec<usize> = order[holdout_count..].to_vec();

    let mut params = SaeParams::new(data.cols(), cfg.dict_size, cfg.seed);
    let mut adam: Vec<AdamState> = SAE_PARAM_NAMES
        .iter()
        .map(|name| AdamState::new_like(params.param(name)))
        .collect();

    let mut batch_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, TAG_BATCH));
    let mut final_train_loss = 0.0;
    for step in 0..cfg.steps {
        let tau = tau_at(&cfg.schedule, step);
        let batch: Vec<usize> = (0..cfg.batch)
            .map(|_| train_indices[batch_rng.random_range(0..train_indices.len())])
            .collect();
        let per_sample: Vec<Result<(f64, SaeGrads)>> =
            par::map_indexed(&batch, parallel, |_, &idx| {
                let mut grads = SaeGrads::zeros_like(&params);
                let breakdown = loss_and_grad(
                    &params,
                    data.row(idx),
                    tau,
                    cfg.lambda,
                    cfg.activation,
                    &mut grads,
                )?;
                Ok((breakdown.total, grads))
            });
        let mut total = SaeGrads::zeros_like(&params);
        let mut batch_loss = 0.0;
        let scale = 1.0 / cfg.batch as f64;
        for result in per_sample {
            let (loss, grads) = result?;
            batch_loss += loss * scale;
            total.add_scaled(&grads, scale);
        }
        if !batch_loss.is_finite() {
            return Err(CoreError::Numeric(format!(
                "sae training diverged at step {step}"
            )));
        }
        final_train_loss = batch_loss;
        params.w_e.grad = total.w_e;
        params.b_e.grad = total.b_e;
        params.w_m.grad = total.w_m;
        params.b_m.grad = total.b_m;
        params.w_d.grad = total.w_d;
        params.b_d.grad = total.b_d;
        for (name, state) in SAE_PARAM_NAMES.iter().zip(adam.iter_mut()) {
            adam_step(params.param_mut(name), state, cfg.lr, name)?;
        }
        if let Some(target) = cfg.decoder_norm {
            renormalize_decoder(&mut params, target);
        }
        params.zero_grads();
    }

    let eval_indices: &[usize] = if holdout_indices.is_empty() {
        &train_indices
    } else {
        &holdout_indices
    };
    let tau_end = cfg.schedule.tau_end;
    let mut fid = 0.0;
    let mut active = 0.0;
    for &idx in eval_indices {
        let x = data.row(idx);
        let act = encode_inference(&params, x, cfg.activation, tau_end)?;
        let x_hat = decode(&params, &act.f)?;
        fid += fidelity_loss(x, &x_hat);
        active += act.active_count as f64;
    }
    let count = eval_indices.len().max(1) as f64;
    Ok(SaeTrainOutcome {
        params,
        heldout_fidelity: fid / count,
        mean_active: active / count,
        train_indices,
        holdout_indices,
        final_train_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sparse planted-factor data: x = coeffs . directions + noise.
    fn planted_data(samples: usize, n: usize, k_factors: usize, seed: u64) -> (Matrix, Matrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // crude orthogonalization of random directions
        let mut dirs = vec![vec![0.0; n]; k_factors];
        for dir in dirs.iter_mut() {
            for v in dir.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        for i in 0..k_factors {
            for j in 0..i {
                let dot: f64 = dirs[i].iter().zip(&dirs[j]).map(|(a, b)| a * b).sum();
                let dj = dirs[j].clone();
                for (v, d) in dirs[i].iter_mut().zip(dj) {
                    *v -= dot * d;
                }
            }
            let norm = dirs[i].iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in dirs[i].iter_mut() {
                *v /= norm;
            }
        }
        let mut data = Matrix::zeros(samples, n);
        let mut coeffs = Matrix::zeros(samples, k_factors);
        for s in 0..samples {
            for fct in 0..k_factors {
                if rng.random::<f64>() < 0.5 {
                    let sign = if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 };
                    let c = sign * rng.random_range(0.5..1.5);
                    coeffs.set(s, fct, c);
                    for (j, &d) in dirs[fct].iter().enumerate() {
                        let v = data.at(s, j) + c * d;
                        data.set(s, j, v);
                    }
                }
            }
            for j in 0..n {
                let v = data.at(s, j) + 0.01 * rng.random_range(-1.0..1.0);
                data.set(s, j, v);
            }
        }
        (data, coeffs)
    }

    #[test]
    fn overcomplete_zero_lambda_drives_fidelity_down() {
        // K = N with lambda = 0: capacity is sufficient and the only
        // pressure is reconstruction.
        let (data, _) = planted_data(120, 8, 3, 1);
        let cfg = SaeTrainConfig {
            dict_size: 8,
            lambda: 0.0,
            steps: 1500,
            seed: 2,
            ..SaeTrainConfig::default()
        };
        let out = train_sae(&data, &cfg, false).unwrap();
        assert!(
            out.heldout_fidelity < 0.01,
            "fidelity {}",
            out.heldout_fidelity
        );
    }

    #[test]
    fn training_is_bitwise_reproducible() {
        let (data, _) = planted_data(60, 6, 2, 3);
        let cfg = SaeTrainConfig {
            dict_size: 8,
            steps: 200,
            seed: 7,
            ..SaeTrainConfig::default()
        };
        let a = train_sae(&data, &cfg, false).unwrap();
        let b = train_sae(&data, &cfg, true).unwrap();
        for name in SAE_PARAM_NAMES {
            assert_eq!(
                a.params.param(name).value.data(),
                b.params.param(name).value.data(),
                "{name} differs between runs"
            );
        }
        assert_eq!(a.heldout_fidelity, b.heldout_fidelity);
    }

    #[test]
    fn stronger_lambda_closes_more_gates() {
        let (data, _) = planted_data(200, 12, 4, 5);
        let active_at = |lambda: f64| {
            let cfg = SaeTrainConfig {
                dict_size: 16,
                lambda,
                steps: 1200,
                seed: 11,
                ..SaeTrainConfig::default()
            };
            train_sae(&data, &cfg, false).unwrap().mean_active
        };
        let low = active_at(0.001);
        let high = active_at(0.03);
        assert!(
            high <= low,
            "active count should not grow with lambda: {high} vs {low}"
        );
    }
}
