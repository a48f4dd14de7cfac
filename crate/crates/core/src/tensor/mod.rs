//! Minimal dense linear algebra and training machinery.
//!
//! Everything is `f64`, row-major, and value-semantic. Gradients are
//! hand-derived in the model modules; this module only supplies the
//! containers, the optimizer, the learning-rate schedule, and a central
//! finite-difference checker that validates every analytic gradient.

mod adam;
mod gradcheck;
mod matrix;
mod schedule;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{finite_diff_check, GradCheckReport, ParamSet, TensorCheck};
pub use matrix::Matrix;
pub use schedule::{lr_at, LrSchedule, ScheduleShape};

/// A trainable tensor: value plus an accumulated gradient of the same shape.
#[derive(Debug, Clone)]
pub struct ParamTensor {
    pub value: Matrix,
    pub grad: Matrix,
}

impl ParamTensor {
    pub fn new(value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        ParamTensor { value, grad }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ParamTensor::new(Matrix::zeros(rows, cols))
    }

    /// Zero the gradient at the start of an accumulation window.
    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn count(&self) -> usize {
        self.value.rows() * self.value.cols()
    }
}
