use crate::error::{CoreError, Result};
use crate::mix_seed;
use crate::tensor::{Matrix, ParamSet, ParamTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Detection head parameters: first linear (H x N), attention scorer,
/// second linear (H2 x H), scalar output.
#[derive(Debug, Clone)]
pub struct ClassifierHead {
    pub w1: ParamTensor,
    pub b1: ParamTensor,
    pub attn_v: ParamTensor,
    pub w2: ParamTensor,
    pub b2: ParamTensor,
    pub w_out: ParamTensor,
    pub b_out: ParamTensor,
    pub dropout_rate: f64,
    pub leaky_slope: f64,
}

pub const HEAD_PARAM_NAMES: [&str; 7] = ["w1", "b1", "attn_v", "w2", "b2", "w_out", "b_out"];

impl ClassifierHead {
    pub fn new(input_width: usize, hidden: usize, hidden2: usize, seed: u64) -> Self {
        let init = |rows: usize, cols: usize, fan_in: usize, tag: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, tag));
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            ParamTensor::new(Matrix::from_vec(rows, cols, data).unwrap())
        };
        ClassifierHead {
            w1: init(hidden, input_width, input_width, 1),
            b1: ParamTensor::zeros(hidden, 1),
            attn_v: init(hidden, 1, hidden, 2),
            w2: init(hidden2, hidden, hidden, 3),
            b2: ParamTensor::zeros(hidden2, 1),
            w_out: init(hidden2, 1, hidden2, 4),
            b_out: ParamTensor::zeros(1, 1),
            dropout_rate: 0.2,
            leaky_slope: 0.01,
        }
    }

    pub fn input_width(&self) -> usize {
        self.w1.value.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w1.value.rows()
    }

    pub fn hidden2(&self) -> usize {
        self.w2.value.rows()
    }

    pub fn zero_grads(&mut self) {
        for name in HEAD_PARAM_NAMES {
            self.param_mut(name).zero_grad();
        }
    }

    fn lrelu(&self, x: f64) -> f64 {
        if x > 0.0 {
            x
        } else {
            self.leaky_slope * x
        }
    }

    fn lrelu_grad(&self, x: f64) -> f64 {
        if x > 0.0 {
            1.0
        } else {
            self.leaky_slope
        }
    }

    /// Deterministic forward pass (no dropout).
    pub fn forward_eval(&self, frames: &Matrix) -> Result<Forward> {
        let (out, _) = self.forward_cached(frames, None)?;
        Ok(out)
    }

    /// Deterministic forward pass keeping the activations needed by
    /// [`ClassifierHead::backward`]; used by gradient checks.
    pub fn forward_for_grad(&self, frames: &Matrix) -> Result<(Forward, Cache)> {
        self.forward_cached(frames, None)
    }

    /// Training forward pass; dropout masks are drawn from `rng` after each
    /// leaky ReLU, with inverted scaling so evaluation needs no rescale.
    pub fn forward_train<R: Rng>(&self, frames: &Matrix, rng: &mut R) -> Result<(Forward, Cache)> {
        let t = frames.rows();
        let keep = 1.0 - self.dropout_rate;
        let mut mask1 = Matrix::zeros(t, self.hidden());
        for v in mask1.data_mut() {
            *v = if rng.random::<f64>() < self.dropout_rate {
                0.0
            } else {
                1.0 / keep
            };
        }
        let mask2: Vec<f64> = (0..self.hidden2())
            .map(|_| {
                if rng.random::<f64>() < self.dropout_rate {
                    0.0
                } else {
                    1.0 / keep
                }
            })
            .collect();
        self.forward_cached(frames, Some((mask1, mask2)))
    }

    fn forward_cached(
        &self,
        frames: &Matrix,
        dropout: Option<(Matrix, Vec<f64>)>,
    ) -> Result<(Forward, Cache)> {
        let t = frames.rows();
        if t == 0 {
            return Err(CoreError::Input("empty embedding sequence".into()));
        }
        if frames.cols() != self.input_width() {
            return Err(CoreError::dimension(
                "forward",
                format!("{}x{}", t, frames.cols()),
                format!("head expects N={}", self.input_width()),
            ));
        }
        let h_dim = self.hidden();
        let (mask1, mask2) = match dropout {
            Some((m1, m2)) => (Some(m1), Some(m2)),
            None => (None, None),
        };

        let mut pre1 = Matrix::zeros(t, h_dim);
        let mut hidden = Matrix::zeros(t, h_dim);
        for ti in 0..t {
            let u = self.w1.value.matvec(frames.row(ti))?;
            for (j, &uj) in u.iter().enumerate() {
                let uj = uj + self.b1.value.at(j, 0);
                pre1.set(ti, j, uj);
                let mut a = self.lrelu(uj);
                if let Some(m1) = &mask1 {
                    a *= m1.at(ti, j);
                }
                hidden.set(ti, j, a);
            }
        }

        let (pooled, attention) = attention_pool(&hidden, self.attn_v.value.data())?;

        let mut pre2 = self.w2.value.matvec(&pooled)?;
        for (j, v) in pre2.iter_mut().enumerate() {
            *v += self.b2.value.at(j, 0);
        }
        let mut z = Vec::with_capacity(pre2.len());
        for (j, &q) in pre2.iter().enumerate() {
            let mut zj = self.lrelu(q);
            if let Some(m2) = &mask2 {
                zj *= m2[j];
            }
            z.push(zj);
        }
        let logit = z
            .iter()
            .zip(self.w_out.value.data())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.b_out.value.at(0, 0);
        let out = Forward {
            logit,
            prob: sigmoid(logit),
            attention: attention.clone(),
            pooled: pooled.clone(),
        };
        let cache = Cache {
            pre1,
            hidden,
            mask1,
            mask2,
            attention,
            pooled,
            pre2,
            z,
        };
        Ok((out, cache))
    }

    /// Run only the post-pooling layers, e.g. with a reconstructed pooled
    /// vector spliced in.
    pub fn forward_from_pooled(&self, pooled: &[f64]) -> Result<(f64, f64)> {
        if pooled.len() != self.hidden() {
            return Err(CoreError::dimension(
                "forward_from_pooled",
                format!("len {}", pooled.len()),
                format!("head expects H={}", self.hidden()),
            ));
        }
        let mut pre2 = self.w2.value.matvec(pooled)?;
        for (j, v) in pre2.iter_mut().enumerate() {
            *v += self.b2.value.at(j, 0);
        }
        let logit = pre2
            .iter()
            .map(|&q| self.lrelu(q))
            .zip(self.w_out.value.data())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.b_out.value.at(0, 0);
        Ok((logit, sigmoid(logit)))
    }

    /// Accumulate gradients of a scalar loss into `grads`, given the loss
    /// gradient with respect to the logit.
    pub fn backward(&self, frames: &Matrix, cache: &Cache, dlogit: f64, grads: &mut HeadGrads) {
        let t = frames.rows();
        let h_dim = self.hidden();
        let h2_dim = self.hidden2();

        grads.b_out.data_mut()[0] += dlogit;
        let mut dz = vec![0.0; h2_dim];
        for j in 0..h2_dim {
            grads.w_out.data_mut()[j] += dlogit * cache.z[j];
            dz[j] = dlogit * self.w_out.value.at(j, 0);
        }
        let mut dq = vec![0.0; h2_dim];
        for j in 0..h2_dim {
            let mut d = dz[j];
            if let Some(m2) = &cache.mask2 {
                d *= m2[j];
            }
            dq[j] = d * self.lrelu_grad(cache.pre2[j]);
        }
        grads.w2.add_outer(&dq, &cache.pooled, 1.0);
        for j in 0..h2_dim {
            grads.b2.data_mut()[j] += dq[j];
        }
        let dx = self.w2.value.tr_matvec(&dq).expect("shape checked");

        // through pooled = sum_t A_t h_t and A = softmax(v . h_t)
        let a = &cache.attention;
        let mut da = vec![0.0; t];
        for ti in 0..t {
            da[ti] = dot(&dx, cache.hidden.row(ti));
        }
        let weighted: f64 = a.iter().zip(&da).map(|(w, d)| w * d).sum();
        let ds: Vec<f64> = (0..t).map(|ti| a[ti] * (da[ti] - weighted)).collect();

        let mut dh = Matrix::zeros(t, h_dim);
        let v = self.attn_v.value.data();
        for ti in 0..t {
            let row = cache.hidden.row(ti);
            for j in 0..h_dim {
                grads.attn_v.data_mut()[j] += ds[ti] * row[j];
            }
            let dst = dh.row_mut(ti);
            for j in 0..h_dim {
                dst[j] = a[ti] * dx[j] + ds[ti] * v[j];
            }
        }

        for ti in 0..t {
            let mut du = vec![0.0; h_dim];
            for j in 0..h_dim {
                let mut d = dh.at(ti, j);
                if let Some(m1) = &cache.mask1 {
                    d *= m1.at(ti, j);
                }
                du[j] = d * self.lrelu_grad(cache.pre1.at(ti, j));
            }
            grads.w1.add_outer(&du, frames.row(ti), 1.0);
            for j in 0..h_dim {
                grads.b1.data_mut()[j] += du[j];
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax-weighted average over time.
///
/// Scores are `attn_v . h_t`; the returned weights are non-negative and sum
/// to one.
pub fn attention_pool(hidden: &Matrix, attn_v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = hidden.rows();
    if t == 0 {
        return Err(CoreError::Input("attention over zero frames".into()));
    }
    if hidden.cols() != attn_v.len() {
        return Err(CoreError::dimension(
            "attention_pool",
            format!("{}x{}", t, hidden.cols()),
            format!("scorer len {}", attn_v.len()),
        ));
    }
    let scores: Vec<f64> = (0..t).map(|ti| dot(hidden.row(ti), attn_v)).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let weights: Vec<f64> = exps.iter().map(|e| e / total).collect();
    let mut pooled = vec![0.0; hidden.cols()];
    for (ti, &w) in weights.iter().enumerate() {
        for (p, &hj) in pooled.iter_mut().zip(hidden.row(ti)) {
            *p += w * hj;
        }
    }
    Ok((pooled, weights))
}

/// Weighted binary cross-entropy in the numerically stable softplus form.
pub fn bce_loss(logit: f64, label: f64, sample_weight: f64) -> f64 {
    let softplus = logit.max(0.0) + (-logit.abs()).exp().ln_1p();
    sample_weight * (softplus - label * logit)
}

/// d(bce_loss)/d(logit).
pub fn bce_dlogit(logit: f64, label: f64, sample_weight: f64) -> f64 {
    sample_weight * (sigmoid(logit) - label)
}

/// Forward outputs shared by evaluation and export.
#[derive(Debug, Clone)]
pub struct Forward {
    pub logit: f64,
    pub prob: f64,
    pub attention: Vec<f64>,
    pub pooled: Vec<f64>,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    pre1: Matrix,
    hidden: Matrix,
    mask1: Option<Matrix>,
    mask2: Option<Vec<f64>>,
    attention: Vec<f64>,
    pooled: Vec<f64>,
    pre2: Vec<f64>,
    z: Vec<f64>,
}

/// Gradient accumulator shaped like the head.
#[derive(Debug, Clone)]
pub struct HeadGrads {
    pub w1: Matrix,
    pub b1: Matrix,
    pub attn_v: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
    pub w_out: Matrix,
    pub b_out: Matrix,
}

impl HeadGrads {
    pub fn zeros_like(head: &ClassifierHead) -> Self {
        HeadGrads {
            w1: Matrix::zeros(head.w1.value.rows(), head.w1.value.cols()),
            b1: Matrix::zeros(head.b1.value.rows(), 1),
            attn_v: Matrix::zeros(head.attn_v.value.rows(), 1),
            w2: Matrix::zeros(head.w2.value.rows(), head.w2.value.cols()),
            b2: Matrix::zeros(head.b2.value.rows(), 1),
            w_out: Matrix::zeros(head.w_out.value.rows(), 1),
            b_out: Matrix::zeros(1, 1),
        }
    }

    pub fn add_scaled(&mut self, other: &HeadGrads, scale: f64) {
        self.w1.add_scaled(&other.w1, scale).unwrap();
        self.b1.add_scaled(&other.b1, scale).unwrap();
        self.attn_v.add_scaled(&other.attn_v, scale).unwrap();
        self.w2.add_scaled(&other.w2, scale).unwrap();
        self.b2.add_scaled(&other.b2, scale).unwrap();
        self.w_out.add_scaled(&other.w_out, scale).unwrap();
        self.b_out.add_scaled(&other.b_out, scale).unwrap();
    }
}

impl ParamSet for ClassifierHead {
    fn param_names(&self) -> Vec<&'static str> {
        HEAD_PARAM_NAMES.to_vec()
    }

    fn param(&self, name: &str) -> &ParamTensor {
        match name {
            "w1" => &self.w1,
            "b1" => &self.b1,
            "attn_v" => &self.attn_v,
            "w2" => &self.w2,
            "b2" => &self.b2,
            "w_out" => &self.w_out,
            "b_out" => &self.b_out,
            _ => panic!("unknown parameter {name}"),
        }
    }

    fn param_mut(&mut self, name: &str) -> &mut ParamTensor {
        match name {
            "w1" => &mut self.w1,
            "b1" => &mut self.b1,
            "attn_v" => &mut self.attn_v,
            "w2" => &mut self.w2,
            "b2" => &mut self.b2,
            "w_out" => &mut self.w_out,
            "b_out" => &mut self.b_out,
            _ => panic!("unknown parameter {name}"),
        }
    }
}
