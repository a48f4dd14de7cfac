use super::{Matrix, ParamTensor};
use crate::error::{CoreError, Result};

/// Per-parameter Adam state with bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Matrix,
    pub v: Matrix,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new_like(param: &ParamTensor) -> Self {
        AdamState {
            m: Matrix::zeros(param.value.rows(), param.value.cols()),
            v: Matrix::zeros(param.value.rows(), param.value.cols()),
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update, in place. The gradient is left untouched;
/// the caller owns zeroing it between accumulation windows.
pub fn adam_step(param: &mut ParamTensor, state: &mut AdamState, lr: f64, name: &str) -> Result<()> {
    if !param.grad.is_finite() {
        return Err(CoreError::Optimizer {
            name: name.to_string(),
            reason: "non-finite gradient".to_string(),
        });
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let b1 = state.beta1;
    let b2 = state.beta2;
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    let value = param.value.data_mut();
    let grad = param.grad.data();
    let m = state.m.data_mut();
    let v = state.v.data_mut();
    for i in 0..value.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        value[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(value: f64, grad: f64) -> ParamTensor {
        let mut p = ParamTensor::new(Matrix::from_vec(1, 1, vec![value]).unwrap());
        p.grad.set(0, 0, grad);
        p
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = scalar_param(1.5, 0.0);
        let mut s = AdamState::new_like(&p);
        for _ in 0..10 {
            adam_step(&mut p, &mut s, 0.01, "p").unwrap();
        }
        assert_eq!(p.value.at(0, 0), 1.5);
        assert_eq!(s.step_count, 10);
    }

    #[test]
    fn first_step_magnitude_is_lr() {
        // First bias-corrected step with any nonzero gradient moves by
        // lr * g / (|g| + eps') which is lr to within the epsilon term.
        let lr = 0.05;
        for &g in &[3.0, -0.02, 1e4] {
            let mut p = scalar_param(0.0, g);
            let mut s = AdamState::new_like(&p);
            adam_step(&mut p, &mut s, lr, "p").unwrap();
            let moved = p.value.at(0, 0).abs();
            assert!((moved - lr).abs() < 1e-6 * lr.max(1.0), "moved {moved}");
            assert_eq!(p.value.at(0, 0).signum(), -g.signum());
        }
    }

    #[test]
    fn constant_gradient_is_monotone() {
        let mut p = scalar_param(1.0, 0.3);
        let mut s = AdamState::new_like(&p);
        let mut prev = p.value.at(0, 0);
        for _ in 0..5 {
            p.grad.set(0, 0, 0.3);
            adam_step(&mut p, &mut s, 0.01, "p").unwrap();
            let cur = p.value.at(0, 0);
            assert!(cur < prev, "value must fall against a positive gradient");
            prev = cur;
        }
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let mut p = scalar_param(0.0, f64::NAN);
        let mut s = AdamState::new_like(&p);
        let err = adam_step(&mut p, &mut s, 0.01, "w_out").unwrap_err();
        assert!(err.to_string().contains("w_out"));
    }
}
