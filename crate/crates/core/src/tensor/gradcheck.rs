use super::ParamTensor;

/// Named access to a model's trainable tensors, for the finite-difference
/// checker and for checkpointing.
pub trait ParamSet {
    fn param_names(&self) -> Vec<&'static str>;
    fn param(&self, name: &str) -> &ParamTensor;
    fn param_mut(&mut self, name: &str) -> &mut ParamTensor;
}

/// Worst observed disagreement for one tensor.
#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: &'static str,
    pub max_rel_err: f64,
    pub worst_index: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub per_tensor: Vec<TensorCheck>,
    pub max_rel_err: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

/// Relative error with an absolute floor so that near-zero gradients are
/// compared absolutely rather than blowing up the ratio.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compare analytic gradients against central finite differences.
///
/// `loss_and_grad(model, accumulate)` must return the loss; when
/// `accumulate` is true it must also leave gradients in each parameter's
/// `grad` field. The closure has to be deterministic (dropout and
/// augmentation off), otherwise the differences measure noise.
pub fn finite_diff_check<M: ParamSet>(
    model: &mut M,
    mut loss_and_grad: impl FnMut(&mut M, bool) -> f64,
    eps: f64,
) -> GradCheckReport {
    assert!(eps > 0.0);
    for name in model.param_names() {
        model.param_mut(name).zero_grad();
    }
    let _ = loss_and_grad(model, true);
    let analytic: Vec<(_, Vec<f64>)> = model
        .param_names()
        .into_iter()
        .map(|name| (name, model.param(name).grad.data().to_vec()))
        .collect();

    let mut per_tensor = Vec::new();
    let mut overall = 0.0f64;
    for (name, grads) in analytic {
        let cols = model.param(name).value.cols();
        let mut worst = TensorCheck {
            name,
            max_rel_err: 0.0,
            worst_index: (0, 0),
            analytic: 0.0,
            numeric: 0.0,
        };
        for (idx, &g) in grads.iter().enumerate() {
            let original = model.param(name).value.data()[idx];
            model.param_mut(name).value.data_mut()[idx] = original + eps;
            let plus = loss_and_grad(model, false);
            model.param_mut(name).value.data_mut()[idx] = original - eps;
            let minus = loss_and_grad(model, false);
            model.param_mut(name).value.data_mut()[idx] = original;
            let numeric = (plus - minus) / (2.0 * eps);
            let err = rel_err(g, numeric);
            if err > worst.max_rel_err {
                worst.max_rel_err = err;
                worst.worst_index = (idx / cols, idx % cols);
                worst.analytic = g;
                worst.numeric = numeric;
            }
        }
        overall = overall.max(worst.max_rel_err);
        per_tensor.push(worst);
    }
    GradCheckReport {
        per_tensor,
        max_rel_err: overall,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    struct Quadratic {
        p: ParamTensor,
    }

    impl ParamSet for Quadratic {
        fn param_names(&self) -> Vec<&'static str> {
            vec!["p"]
        }
        fn param(&self, _name: &str) -> &ParamTensor {
            &self.p
        }
        fn param_mut(&mut self, _name: &str) -> &mut ParamTensor {
            &mut self.p
        }
    }

    fn half_norm_sq(model: &mut Quadratic, accumulate: bool) -> f64 {
        let loss = model.p.value.data().iter().map(|v| 0.5 * v * v).sum();
        if accumulate {
            let grads: Vec<f64> = model.p.value.data().to_vec();
            model.p.grad.data_mut().copy_from_slice(&grads);
        }
        loss
    }

    #[test]
    fn quadratic_loss_checks_tightly() {
        let mut model = Quadratic {
            p: ParamTensor::new(Matrix::from_vec(2, 2, vec![0.3, -1.2, 2.0, 0.7]).unwrap()),
        };
        let report = finite_diff_check(&mut model, half_norm_sq, 1e-4);
        assert!(report.max_rel_err < 1e-6, "err {}", report.max_rel_err);
    }

    #[test]
    fn constant_loss_has_zero_error() {
        let mut model = Quadratic {
            p: ParamTensor::zeros(3, 1),
        };
        let report = finite_diff_check(&mut model, |_m, _acc| 4.2, 1e-4);
        assert_eq!(report.max_rel_err, 0.0);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let mut model = Quadratic {
            p: ParamTensor::new(Matrix::from_vec(1, 1, vec![1.0]).unwrap()),
        };
        let report = finite_diff_check(
            &mut model,
            |m, acc| {
                let v = m.p.value.at(0, 0);
                if acc {
                    m.p.grad.set(0, 0, 2.0 * v); // deliberately wrong: loss is v^2/2
                }
                0.5 * v * v
            },
            1e-4,
        );
        assert!(report.max_rel_err > 0.1);
    }
}
