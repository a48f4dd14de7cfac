//! Mask-gated sparse autoencoder over pooled activations.
//!
//! The encoder computes a value projection and, separately, a gate: a
//! temperature-controlled sigmoid mask. The code is their elementwise
//! product, so whether an entry fires is decoupled from how strongly and
//! with what sign. Sparsity is penalized through the mask times the decoder
//! column norm, leaving activation scale free. A plain ReLU variant serves
//! as the comparison baseline.

mod substitute;
mod sweep;
mod train;

pub use substitute::{substitute_and_score, SubstitutionReport};
pub use sweep::{
    frontier, interpolate_fidelity, lambda_sweep, sweep_rows, SweepPoint, SWEEP_CSV_HEADER,
};
pub use train::{encode_inference, train_sae, SaeTrainConfig, SaeTrainOutcome};

use crate::error::{CoreError, Result};
use crate::mix_seed;
use crate::tensor::{Matrix, ParamSet, ParamTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dual-encoder dictionary parameters. `w_e`/`b_e` produce entry values,
/// `w_m`/`b_m` the mask logits, `w_d`/`b_d` the reconstruction.
#[derive(Debug, Clone)]
pub struct SaeParams {
    pub w_e: ParamTensor,
    pub b_e: ParamTensor,
    pub w_m: ParamTensor,
    pub b_m: ParamTensor,
    pub w_d: ParamTensor,
    pub b_d: ParamTensor,
}

pub const SAE_PARAM_NAMES: [&str; 6] = ["w_e", "b_e", "w_m", "b_m", "w_d", "b_d"];

impl SaeParams {
    /// Initialization: decoder columns are random directions with norm 0.1,
    /// the value encoder starts as the decoder transpose, mask weights are
    /// small, and mask biases start at -1 so gates begin mostly closed.
    pub fn new(input_width: usize, dict_size: usize, seed: u64) -> Self {
        let mut dir_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5d));
        let mut w_d = Matrix::zeros(input_width, dict_size);
        for i in 0..dict_size {
            let mut col: Vec<f64> = (0..input_width)
                .map(|_| normal_sample(&mut dir_rng))
                .collect();
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            for v in col.iter_mut() {
                *v *= 0.1 / norm;
            }
            for (j, &v) in col.iter().enumerate() {
                w_d.set(j, i, v);
            }
        }
        let w_e = w_d.transpose();
        let mut mask_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x3e));
        let mut w_m = Matrix::zeros(dict_size, input_width);
        for v in w_m.data_mut() {
            *v = 0.01 * normal_sample(&mut mask_rng);
        }
        let mut b_m = Matrix::zeros(dict_size, 1);
        b_m.fill(-1.0);
        SaeParams {
            w_e: ParamTensor::new(w_e),
            b_e: ParamTensor::zeros(dict_size, 1),
            w_m: ParamTensor::new(w_m),
            b_m: ParamTensor::new(b_m),
            w_d: ParamTensor::new(w_d),
            b_d: ParamTensor::zeros(input_width, 1),
        }
    }

    pub fn input_width(&self) -> usize {
        self.w_e.value.cols()
    }

    pub fn dict_size(&self) -> usize {
        self.w_e.value.rows()
    }

    pub fn zero_grads(&mut self) {
        for name in SAE_PARAM_NAMES {
            self.param_mut(name).zero_grad();
        }
    }

    fn decoder_col_norms(&self) -> Vec<f64> {
        (0..self.dict_size())
            .map(|i| self.w_d.value.col_norm(i))
            .collect()
    }
}

fn normal_sample<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; two uniforms, one sample, deterministic draw order.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Mask temperature: linear from `tau_start` at step 0 to `tau_end` at
/// `anneal_steps`, constant afterwards.
#[derive(Debug, Clone, Copy)]
pub struct TemperatureSchedule {
    pub tau_start: f64,
    pub tau_end: f64,
    pub anneal_steps: u64,
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        TemperatureSchedule {
            tau_start: 1.0,
            tau_end: 0.2,
            anneal_steps: 200,
        }
    }
}

pub fn tau_at(schedule: &TemperatureSchedule, step: u64) -> f64 {
    if step >= schedule.anneal_steps {
        return schedule.tau_end;
    }
    let frac = step as f64 / schedule.anneal_steps as f64;
    schedule.tau_start + (schedule.tau_end - schedule.tau_start) * frac
}

/// Which encoder the dictionary uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaeActivation {
    Mask,
    Relu,
}

impl SaeActivation {
    pub fn as_str(self) -> &'static str {
        match self {
            SaeActivation::Mask => "mask",
            SaeActivation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mask" => Ok(SaeActivation::Mask),
            "relu" => Ok(SaeActivation::Relu),
            other => Err(CoreError::Config(format!("unknown activation '{other}'"))),
        }
    }
}

/// One sample's sparse code.
#[derive(Debug, Clone)]
pub struct DictionaryActivation {
    pub f: Vec<f64>,
    pub mask: Vec<f64>,
    pub active_count: usize,
}

/// Mask threshold that counts an entry as active.
pub const ACTIVE_THRESHOLD: f64 = 0.5;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_width(p: &SaeParams, x: &[f64]) -> Result<()> {
    if x.len() != p.input_width() {
        return Err(CoreError::dimension(
            "sae encode",
            format!("input len {}", x.len()),
            format!("params expect N={}", p.input_width()),
        ));
    }
    Ok(())
}

/// Mask encoder: `f = (W_e x + b_e) * sigmoid(tau (W_m x + b_m))`.
pub fn encode(p: &SaeParams, x: &[f64], tau: f64) -> Result<DictionaryActivation> {
    check_width(p, x)?;
    if tau <= 0.0 {
        return Err(CoreError::Input("temperature must be positive".into()));
    }
    let mut value = p.w_e.value.matvec(x)?;
    for (j, v) in value.iter_mut().enumerate() {
        *v += p.b_e.value.at(j, 0);
    }
    let mut mask_logits = p.w_m.value.matvec(x)?;
    for (j, v) in mask_logits.iter_mut().enumerate() {
        *v += p.b_m.value.at(j, 0);
    }
    let mask: Vec<f64> = mask_logits.iter().map(|&l| sigmoid(tau * l)).collect();
    let f: Vec<f64> = value.iter().zip(&mask).map(|(v, m)| v * m).collect();
    let active_count = mask.iter().filter(|&&m| m > ACTIVE_THRESHOLD).count();
    Ok(DictionaryActivation {
        f,
        mask,
        active_count,
    })
}

/// ReLU baseline: `f = max(0, W_e x + b_e)`; the implied mask is the 0/1
/// activity indicator, used only for sparsity accounting.
pub fn relu_encode(p: &SaeParams, x: &[f64]) -> Result<DictionaryActivation> {
    check_width(p, x)?;
    let mut value = p.w_e.value.matvec(x)?;
    for (j, v) in value.iter_mut().enumerate() {
        *v += p.b_e.value.at(j, 0);
    }
    let f: Vec<f64> = value.iter().map(|&v| v.max(0.0)).collect();
    let mask: Vec<f64> = f.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
    let active_count = mask.iter().filter(|&&m| m > ACTIVE_THRESHOLD).count();
    Ok(DictionaryActivation {
        f,
        mask,
        active_count,
    })
}

/// Affine reconstruction `x_hat = W_d f + b_d`.
pub fn decode(p: &SaeParams, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != p.dict_size() {
        return Err(CoreError::dimension(
            "sae decode",
            format!("code len {}", f.len()),
            format!("params expect K={}", p.dict_size()),
        ));
    }
    let mut out = p.w_d.value.matvec(f)?;
    for (j, v) in out.iter_mut().enumerate() {
        *v += p.b_d.value.at(j, 0);
    }
    Ok(out)
}

/// Mean squared reconstruction error.
pub fn fidelity_loss(x: &[f64], x_hat: &[f64]) -> f64 {
    assert_eq!(x.len(), x_hat.len());
    x.iter()
        .zip(x_hat)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        / x.len() as f64
}

/// `(1/K) sum_i mask_i * ||W_d column i||_2`. Penalizes open gates scaled
/// by how much reconstruction each entry can move, never activation scale.
pub fn sparsity_loss(p: &SaeParams, mask: &[f64]) -> f64 {
    assert_eq!(mask.len(), p.dict_size());
    let norms = p.decoder_col_norms();
    mask.iter()
        .zip(&norms)
        .map(|(m, n)| m * n)
        .sum::<f64>()
        / p.dict_size() as f64
}

#[derive(Debug, Clone, Copy)]
pub struct LossBreakdown {
    pub total: f64,
    pub fidelity: f64,
    pub sparsity: f64,
}

/// Full loss `fidelity + lambda * sparsity` for one sample (mask path).
pub fn total_loss(p: &SaeParams, x: &[f64], tau: f64, lambda: f64) -> Result<LossBreakdown> {
    let act = encode(p, x, tau)?;
    let x_hat = decode(p, &act.f)?;
    let fidelity = fidelity_loss(x, &x_hat);
    let sparsity = sparsity_loss(p, &act.mask);
    Ok(LossBreakdown {
        total: fidelity + lambda * sparsity,
        fidelity,
        sparsity,
    })
}

/// Gradient accumulator shaped like [`SaeParams`].
#[derive(Debug, Clone)]
pub struct SaeGrads {
    pub w_e: Matrix,
    pub b_e: Matrix,
    pub w_m: Matrix,
    pub b_m: Matrix,
    pub w_d: Matrix,
    pub b_d: Matrix,
}

impl SaeGrads {
    pub fn zeros_like(p: &SaeParams) -> Self {
        SaeGrads {
            w_e: Matrix::zeros(p.dict_size(), p.input_width()),
            b_e: Matrix::zeros(p.dict_size(), 1),
            w_m: Matrix::zeros(p.dict_size(), p.input_width()),
            b_m: Matrix::zeros(p.dict_size(), 1),
            w_d: Matrix::zeros(p.input_width(), p.dict_size()),
            b_d: Matrix::zeros(p.input_width(), 1),
        }
    }

    pub fn add_scaled(&mut self, other: &SaeGrads, scale: f64) {
        self.w_e.add_scaled(&other.w_e, scale).unwrap();
        self.b_e.add_scaled(&other.b_e, scale).unwrap();
        self.w_m.add_scaled(&other.w_m, scale).unwrap();
        self.b_m.add_scaled(&other.b_m, scale).unwrap();
        self.w_d.add_scaled(&other.w_d, scale).unwrap();
        self.b_d.add_scaled(&other.b_d, scale).unwrap();
    }
}

/// One-sample loss and gradients. The ReLU baseline penalizes the combined
/// activations `f` (the original form of the decoder-norm L1); the mask
/// variant penalizes only the mask.
pub fn loss_and_grad(
    p: &SaeParams,
    x: &[f64],
    tau: f64,
    lambda: f64,
    activation: SaeActivation,
    grads: &mut SaeGrads,
) -> Result<LossBreakdown> {
    check_width(p, x)?;
    let n = p.input_width();
    let k = p.dict_size();
    let norms = p.decoder_col_norms();

    // shared encoder value path
    let mut value = p.w_e.value.matvec(x)?;
    for (j, v) in value.iter_mut().enumerate() {
        *v += p.b_e.value.at(j, 0);
    }

    let (f, mask): (Vec<f64>, Vec<f64>) = match activation {
        SaeActivation::Mask => {
            let mut logits = p.w_m.value.matvec(x)?;
            for (j, v) in logits.iter_mut().enumerate() {
                *v += p.b_m.value.at(j, 0);
            }
            let mask: Vec<f64> = logits.iter().map(|&l| sigmoid(tau * l)).collect();
            let f = value.iter().zip(&mask).map(|(v, m)| v * m).collect();
            (f, mask)
        }
        SaeActivation::Relu => {
            let f: Vec<f64> = value.iter().map(|&v| v.max(0.0)).collect();
            let mask = f.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
            (f, mask)
        }
    };

    let x_hat = decode(p, &f)?;
    let fidelity = fidelity_loss(x, &x_hat);
    let sparsity = match activation {
        SaeActivation::Mask => mask.iter().zip(&norms).map(|(m, nn)| m * nn).sum::<f64>() / k as f64,
        SaeActivation::Relu => f.iter().zip(&norms).map(|(v, nn)| v * nn).sum::<f64>() / k as f64,
    };
    let total = fidelity + lambda * sparsity;

    let dx_hat: Vec<f64> = x_hat
        .iter()
        .zip(x)
        .map(|(h, v)| 2.0 * (h - v) / n as f64)
        .collect();
    for (j, &d) in dx_hat.iter().enumerate() {
        grads.b_d.data_mut()[j] += d;
    }
    grads.w_d.add_outer(&dx_hat, &f, 1.0);
    // sparsity couples into the decoder through the column norms
    let sp_weight: Vec<f64> = match activation {
        SaeActivation::Mask => mask.clone(),
        SaeActivation::Relu => f.clone(),
    };
    for i in 0..k {
        if norms[i] > 1e-12 && sp_weight[i] != 0.0 {
            let scale = lambda * sp_weight[i] / (k as f64 * norms[i]);
            for j in 0..n {
                grads.w_d.data_mut()[j * k + i] += scale * p.w_d.value.at(j, i);
            }
        }
    }

    let df = p.w_d.value.tr_matvec(&dx_hat)?;
    match activation {
        SaeActivation::Mask => {
            let dvalue: Vec<f64> = df.iter().zip(&mask).map(|(d, m)| d * m).collect();
            grads.w_e.add_outer(&dvalue, x, 1.0);
            for (j, &d) in dvalue.iter().enumerate() {
                grads.b_e.data_mut()[j] += d;
            }
            let dmask: Vec<f64> = df
                .iter()
                .zip(&value)
                .zip(&norms)
                .map(|((d, v), nn)| d * v + lambda * nn / k as f64)
                .collect();
            let dpre: Vec<f64> = dmask
                .iter()
                .zip(&mask)
                .map(|(d, m)| d * tau * m * (1.0 - m))
                .collect();
            grads.w_m.add_outer(&dpre, x, 1.0);
            for (j, &d) in dpre.iter().enumerate() {
                grads.b_m.data_mut()[j] += d;
            }
        }
        SaeActivation::Relu => {
            let dvalue: Vec<f64> = df
                .iter()
                .zip(&norms)
                .zip(&value)
                .map(|((d, nn), v)| {
                    if *v > 0.0 {
                        d + lambda * nn / k as f64
                    } else {
                        0.0
                    }
                })
                .collect();
            grads.w_e.add_outer(&dvalue, x, 1.0);
            for (j, &d) in dvalue.iter().enumerate() {
                grads.b_e.data_mut()[j] += d;
            }
        }
    }

    Ok(LossBreakdown {
        total,
        fidelity,
        sparsity,
    })
}

impl ParamSet for SaeParams {
    fn param_names(&self) -> Vec<&'static str> {
        SAE_PARAM_NAMES.to_vec()
    }

    fn param(&self, name: &str) -> &ParamTensor {
        match name {
            "w_e" => &self.w_e,
            "b_e" => &self.b_e,
            "w_m" => &self.w_m,
            "b_m" => &self.b_m,
            "w_d" => &self.w_d,
            "b_d" => &self.b_d,
            _ => panic!("unknown parameter {name}"),
        }
    }

    fn param_mut(&mut self, name: &str) -> &mut ParamTensor {
        match name {
            "w_e" => &mut self.w_e,
            "b_e" => &mut self.b_e,
            "w_m" => &mut self.w_m,
            "b_m" => &mut self.b_m,
            "w_d" => &mut self.w_d,
            "b_d" => &mut self.b_d,
            _ => panic!("unknown parameter {name}"),
        }
    }
}
