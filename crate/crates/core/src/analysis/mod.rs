//! Interpretation layer: rank correlations between dictionary activations
//! and acoustic features, significance with per-speaker subsampling and
//! Bonferroni adjustment, attention/energy cross-correlation, and
//! per-subject covariate correlation.

mod anticorr;
mod correlate;
mod covariate;
mod pvalue;
mod rank;

pub use anticorr::{attention_energy_xcorr, AnticorrConfig, XcorrResult};
pub use correlate::{
    correlate_dictionary, correlate_dictionary_with, per_speaker_subsample, CorrelationReport,
    FeatureMatrix, PvalueMode, ReportRow, REPORT_CSV_HEADER,
};
pub use covariate::{subject_covariate_corr, CovariateResult};
pub use pvalue::{bonferroni, spearman_pvalue, student_t_two_sided, PValue};
pub use rank::{average_ranks, spearman};

use std::fmt;

/// A statistic that cannot be computed from the given data. Callers must
/// surface this explicitly; it is never coerced to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Undefined {
    TooFewSamples(usize),
    ZeroVariance(&'static str),
    ConstantSeries(&'static str),
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Undefined::TooFewSamples(n) => write!(f, "too few samples (n={n})"),
            Undefined::ZeroVariance(which) => write!(f, "zero variance in {which}"),
            Undefined::ConstantSeries(which) => write!(f, "constant binary series in {which}"),
        }
    }
}
