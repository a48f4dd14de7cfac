use super::train::encode_inference;
use super::{decode, SaeActivation, SaeParams};
use crate::detector::{ClassifierHead, Confusion};
use crate::error::{CoreError, Result};
use crate::io::{Label, SampleMeta};
use crate::tensor::Matrix;

/// Side-by-side evaluation with and without the dictionary in the loop.
#[derive(Debug, Clone)]
pub struct SubstitutionReport {
    pub f1_original: Option<f64>,
    pub f1_substituted: Option<f64>,
    /// `f1_original - f1_substituted` in percentage points (positive means
    /// the substitution lost accuracy).
    pub drop_pp: Option<f64>,
}

impl SubstitutionReport {
    pub fn abs_drop_pp(&self) -> Option<f64> {
        self.drop_pp.map(f64::abs)
    }
}

/// Run the head twice per sample: once normally and once with the pooled
/// vector replaced by its dictionary reconstruction.
pub fn substitute_and_score(
    head: &ClassifierHead,
    sae: &SaeParams,
    activation: SaeActivation,
    tau_end: f64,
    samples: &[(SampleMeta, Matrix)],
) -> Result<SubstitutionReport> {
    if sae.input_width() != head.hidden() {
        return Err(CoreError::dimension(
            "substitute_and_score",
            format!("sae N={}", sae.input_width()),
            format!("pooled width H={}", head.hidden()),
        ));
    }
    let mut original = Confusion::default();
    let mut substituted = Confusion::default();
    for (meta, frames) in samples {
        let out = head.forward_eval(frames)?;
        let act = encode_inference(sae, &out.pooled, activation, tau_end)?;
        let reconstructed = decode(sae, &act.f)?;
        let (_, prob_sub) = head.forward_from_pooled(&reconstructed)?;
        let actual_pd = meta.label == Label::Pd;
        record(&mut original, out.prob >= 0.5, actual_pd);
        record(&mut substituted, prob_sub >= 0.5, actual_pd);
    }
    let f1_original = original.f1();
    let f1_substituted = substituted.f1();
    let drop_pp = match (f1_original, f1_substituted) {
        (Some(a), Some(b)) => Some((a - b) * 100.0),
        _ => None,
    };
    Ok(SubstitutionReport {
        f1_original,
        f1_substituted,
        drop_pp,
    })
}

fn record(c: &mut Confusion, predicted_pd: bool, actual_pd: bool) {
    match (predicted_pd, actual_pd) {
        (true, true) => c.tp += 1,
        (true, false) => c.fp += 1,
        (false, true) => c.fn_ += 1,
        (false, false) => c.tn += 1,
    }
}
