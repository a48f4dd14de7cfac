use super::pvalue::{spearman_pvalue, PValue};
use super::rank::spearman;
use crate::error::{CoreError, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy)]
pub struct CovariateResult {
    pub rho: f64,
    pub p: PValue,
    pub n_subjects: usize,
}

/// Average per-sample scores into one value per subject, then correlate
/// the subject means with a per-subject covariate.
pub fn subject_covariate_corr(
    scores: &[f64],
    subjects: &[String],
    covariate: &BTreeMap<String, f64>,
) -> Result<CovariateResult> {
    if scores.len() != subjects.len() {
        return Err(CoreError::Input(format!(
            "{} scores for {} subject labels",
            scores.len(),
            subjects.len()
        )));
    }
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (score, subject) in scores.iter().zip(subjects) {
        let entry = sums.entry(subject.as_str()).or_insert((0.0, 0));
        entry.0 += score;
        entry.1 += 1;
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (subject, (sum, count)) in &sums {
        if let Some(&value) = covariate.get(*subject) {
            xs.push(sum / *count as f64);
            ys.push(value);
        }
    }
    if xs.len() < 4 {
        return Err(CoreError::Input(format!(
            "covariate correlation needs at least 4 subjects, found {}",
            xs.len()
        )));
    }
    let rho = spearman(&xs, &ys)
        .map_err(|u| CoreError::Numeric(format!("covariate correlation: {u}")))?;
    let p = spearman_pvalue(rho, xs.len())?;
    Ok(CovariateResult {
        rho,
        p,
        n_subjects: xs.len(),
    })
}
