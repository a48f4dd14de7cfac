//! Prebuilt finite-difference gradient checks over small random model
//! instances, shared by the command line and the verification suites.

use crate::detector::{bce_dlogit, bce_loss, ClassifierHead, HeadGrads};
use crate::mix_seed;
use crate::sae::{loss_and_grad, SaeActivation, SaeGrads, SaeParams};
use crate::tensor::{finite_diff_check, GradCheckReport, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_frames(rng: &mut ChaCha8Rng, t: usize, n: usize) -> Matrix {
    Matrix::from_vec(t, n, (0..t * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Batch BCE loss of a small random detector head against central finite
/// differences. `inject_error` corrupts one analytic gradient so callers
/// can prove the check actually detects mistakes.
pub fn detector_gradcheck(seed: u64, eps: f64, inject_error: bool) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    let mut head = ClassifierHead::new(6, 4, 3, mix_seed(seed, 2));
    let batch: Vec<(Matrix, f64, f64)> = (0..4)
        .map(|i| {
            let t = 2 + (i % 3);
            (
                random_frames(&mut rng, t, 6),
                f64::from(i % 2 == 0),
                if i % 2 == 0 { 1.5 } else { 0.7 },
            )
        })
        .collect();
    finite_diff_check(
        &mut head,
        move |model, accumulate| {
            let mut grads = HeadGrads::zeros_like(model);
            let mut loss = 0.0;
            for (frames, label, weight) in &batch {
                let (out, cache) = model.forward_for_grad(frames).unwrap();
                loss += bce_loss(out.logit, *label, *weight) / batch.len() as f64;
                if accumulate {
                    let dl = bce_dlogit(out.logit, *label, *weight) / batch.len() as f64;
                    model.backward(frames, &cache, dl, &mut grads);
                }
            }
            if accumulate {
                if inject_error {
                    grads.w_out.data_mut()[0] += 0.5;
                }
                model.w1.grad = grads.w1.clone();
                model.b1.grad = grads.b1.clone();
                model.attn_v.grad = grads.attn_v.clone();
                model.w2.grad = grads.w2.clone();
                model.b2.grad = grads.b2.clone();
                model.w_out.grad = grads.w_out.clone();
                model.b_out.grad = grads.b_out.clone();
            }
            loss
        },
        eps,
    )
}

/// Full dictionary loss (fidelity + lambda * sparsity) of a small random
/// instance against central finite differences.
pub fn sae_gradcheck(seed: u64, eps: f64, activation: SaeActivation) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 3));
    let mut params = SaeParams::new(6, 8, mix_seed(seed, 4));
    let xs: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    finite_diff_check(
        &mut params,
        move |model, accumulate| {
            let mut grads = SaeGrads::zeros_like(model);
            let mut loss = 0.0;
            for x in &xs {
                let b = loss_and_grad(model, x, 0.6, 0.01, activation, &mut grads).unwrap();
                loss += b.total / xs.len() as f64;
            }
            if accumulate {
                let scale = 1.0 / xs.len() as f64;
                let mut scaled = SaeGrads::zeros_like(model);
                scaled.add_scaled(&grads, scale);
                model.w_e.grad = scaled.w_e;
                model.b_e.grad = scaled.b_e;
                model.w_m.grad = scaled.w_m;
                model.b_m.grad = scaled.b_m;
                model.w_d.grad = scaled.w_d;
                model.b_d.grad = scaled.b_d;
            }
            loss
        },
        eps,
    )
}
