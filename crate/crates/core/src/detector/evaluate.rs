use super::head::ClassifierHead;
use crate::error::Result;
use crate::io::{Label, Language, SampleMeta};
use crate::tensor::Matrix;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    fn record(&mut self, predicted_pd: bool, actual_pd: bool) {
        match (predicted_pd, actual_pd) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// F1 with PD as the positive class; `None` when the slice holds no
    /// actual positives, which is undefined rather than zero.
    pub fn f1(&self) -> Option<f64> {
        if self.tp + self.fn_ == 0 {
            return None;
        }
        Some(2.0 * self.tp as f64 / (2 * self.tp + self.fp + self.fn_) as f64)
    }
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub f1: Option<f64>,
    pub confusion: Confusion,
    pub per_language: BTreeMap<String, (Option<f64>, Confusion)>,
}

/// Threshold probability 0.5, PD positive, with per-language slices.
pub fn evaluate(head: &ClassifierHead, samples: &[(SampleMeta, Matrix)]) -> Result<EvalReport> {
    let mut overall = Confusion::default();
    let mut by_lang: BTreeMap<String, Confusion> = BTreeMap::new();
    for (meta, frames) in samples {
        let out = head.forward_eval(frames)?;
        let predicted_pd = out.prob >= 0.5;
        let actual_pd = meta.label == Label::Pd;
        overall.record(predicted_pd, actual_pd);
        let lang = match meta.language {
            Language::Fr => "Fr",
            Language::En => "En",
        };
        by_lang
            .entry(lang.to_string())
            .or_default()
            .record(predicted_pd, actual_pd);
    }
    let per_language = by_lang
        .into_iter()
        .map(|(lang, c)| (lang, (c.f1(), c)))
        .collect();
    Ok(EvalReport {
        f1: overall.f1(),
        confusion: overall,
        per_language,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_formula_spot_checks() {
        let all_right = Confusion {
            tp: 4,
            tn: 4,
            ..Default::default()
        };
        assert_eq!(all_right.f1(), Some(1.0));

        let all_predicted_hc = Confusion {
            fn_: 3,
            tn: 5,
            ..Default::default()
        };
        assert_eq!(all_predicted_hc.f1(), Some(0.0));

        let mixed = Confusion {
            tp: 3,
            fp: 1,
            fn_: 1,
            tn: 0,
        };
        assert_eq!(mixed.f1(), Some(0.75));
    }

    #[test]
    fn slice_without_positives_is_undefined() {
        let no_pd = Confusion {
            fp: 2,
            tn: 6,
            ..Default::default()
        };
        assert_eq!(no_pd.f1(), None);
    }
}
