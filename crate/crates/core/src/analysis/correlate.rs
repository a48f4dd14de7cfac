use super::pvalue::{bonferroni, spearman_pvalue};
use super::rank::{average_ranks, spearman};
use crate::error::{CoreError, Result};
use crate::mix_seed;
use crate::par;
use crate::tensor::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Sample-by-feature table with explicit missing values and a speaker id
/// per row.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub sample_ids: Vec<String>,
    pub speakers: Vec<String>,
    pub columns: Vec<(String, Vec<Option<f64>>)>,
}

impl FeatureMatrix {
    pub fn new(
        sample_ids: Vec<String>,
        speakers: Vec<String>,
        columns: Vec<(String, Vec<Option<f64>>)>,
    ) -> Result<Self> {
        if speakers.len() != sample_ids.len() {
            return Err(CoreError::Input("speaker/sample length mismatch".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (name, values) in &columns {
            if !seen.insert(name.clone()) {
                return Err(CoreError::Input(format!("duplicate feature column '{name}'")));
            }
            if values.len() != sample_ids.len() {
                return Err(CoreError::Input(format!(
                    "feature column '{name}' has {} values for {} samples",
                    values.len(),
                    sample_ids.len()
                )));
            }
        }
        Ok(FeatureMatrix {
            sample_ids,
            speakers,
            columns,
        })
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }
}

/// Pick one sample per speaker, uniformly within each speaker's samples.
/// Speakers are visited in sorted order so a fixed seed fixes the subset.
pub fn per_speaker_subsample<R: Rng>(speakers: &[String], rng: &mut R) -> Vec<usize> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in speakers.iter().enumerate() {
        groups.entry(s.as_str()).or_default().push(i);
    }
    groups
        .values()
        .map(|members| members[rng.random_range(0..members.len())])
        .collect()
}

/// How per-test significance is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PvalueMode {
    /// Student-t approximation with n-2 degrees of freedom.
    TApprox,
    /// Monte-Carlo permutation null conditional on each feature column's
    /// tie pattern (one shared table per column); p = (1 + hits) / (count + 1).
    Permutation { count: usize },
}

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub entry: usize,
    pub feature: String,
    pub rho: f64,
    pub p_raw: f64,
    pub p_adj: f64,
    pub n_used: usize,
    pub prediction_rho: Option<f64>,
}

pub const REPORT_CSV_HEADER: [&str; 8] = [
    "entry",
    "feature",
    "rho",
    "p_raw",
    "p_adj",
    "n_used",
    "prediction_rho",
    "seed",
];

#[derive(Debug, Clone)]
pub struct CorrelationReport {
    /// Sorted by |rho| descending, then entry, then feature name.
    pub rows: Vec<ReportRow>,
    pub seed: u64,
    /// Number of tests the Bonferroni adjustment divides over: every
    /// (entry, feature) pair that produced a defined statistic.
    pub total_tests: usize,
    pub subsample: Vec<usize>,
    pub skipped_entries: Vec<(usize, String)>,
}

impl CorrelationReport {
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.entry.to_string(),
                    r.feature.clone(),
                    format!("{}", r.rho),
                    format!("{:e}", r.p_raw),
                    format!("{:e}", r.p_adj),
                    r.n_used.to_string(),
                    r.prediction_rho.map_or(String::new(), |v| format!("{v}")),
                    self.seed.to_string(),
                ]
            })
            .collect()
    }
}

/// Correlate every dictionary entry with every feature column on a
/// one-sample-per-speaker subsample, plus each entry's correlation with the
/// model prediction on the same subsample.
pub fn correlate_dictionary(
    activations: &Matrix,
    activation_ids: &[String],
    predictions: &[f64],
    features: &FeatureMatrix,
    seed: u64,
    parallel: bool,
) -> Result<CorrelationReport> {
    correlate_dictionary_with(
        activations,
        activation_ids,
        predictions,
        features,
        seed,
        parallel,
        PvalueMode::TApprox,
    )
}

/// [`correlate_dictionary`] with an explicit p-value mode.
#[allow(clippy::too_many_arguments)]
pub fn correlate_dictionary_with(
    activations: &Matrix,
    activation_ids: &[String],
    predictions: &[f64],
    features: &FeatureMatrix,
    seed: u64,
    parallel: bool,
    pvalue_mode: PvalueMode,
) -> Result<CorrelationReport> {
    if activations.rows() != activation_ids.len() || activations.rows() != predictions.len() {
        return Err(CoreError::Input(format!(
            "{} activation rows, {} ids, {} predictions",
            activations.rows(),
            activation_ids.len(),
            predictions.len()
        )));
    }
    if features.len() != activations.rows() {
        return Err(CoreError::Input(format!(
            "feature table has {} rows for {} activation rows",
            features.len(),
            activations.rows()
        )));
    }
    let misaligned: Vec<String> = activation_ids
        .iter()
        .zip(&features.sample_ids)
        .filter(|(a, b)| a != b)
        .take(5)
        .map(|(a, b)| format!("{a} != {b}"))
        .collect();
    if !misaligned.is_empty() {
        return Err(CoreError::Input(format!(
            "sample ids misaligned with feature rows: {}",
            misaligned.join(", ")
        )));
    }
    if features.columns.is_empty() || activations.cols() == 0 {
        return Err(CoreError::Input("empty correlation grid".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xc0));
    let subsample = per_speaker_subsample(&features.speakers, &mut rng);

    // One permutation null table per feature column, conditional on the
    // ranks of the column's usable values inside the subsample. Columns
    // sharing (n_used, tie signature) share a table: the conditional null
    // depends on the rank pattern only.
    let null_tables: Vec<Option<std::sync::Arc<Vec<f64>>>> = match pvalue_mode {
        PvalueMode::TApprox => vec![None; features.columns.len()],
        PvalueMode::Permutation { count } => {
            let mut by_signature: BTreeMap<(usize, Vec<usize>), std::sync::Arc<Vec<f64>>> =
                BTreeMap::new();
            features
                .columns
                .iter()
                .map(|(_, values)| {
                    let used: Vec<f64> = subsample
                        .iter()
                        .filter_map(|&row| values[row])
                        .collect();
                    if used.len() < 4 {
                        return None;
                    }
                    let signature = tie_signature(&used);
                    let key = (used.len(), signature);
                    let table = by_signature
                        .entry(key.clone())
                        .or_insert_with(|| {
                            let table_seed =
                                mix_seed(seed, 0xe0 ^ fnv_key(&key.1, key.0));
                            std::sync::Arc::new(permutation_null_table(&used, count, table_seed))
                        })
                        .clone();
                    Some(table)
                })
                .collect()
        }
    };

    let k = activations.cols();
    let entries: Vec<usize> = (0..k).collect();
    let per_entry: Vec<(Vec<ReportRow>, Option<(usize, String)>)> =
        par::map_indexed(&entries, parallel, |_, &entry| {
            let act: Vec<f64> = subsample
                .iter()
                .map(|&row| activations.at(row, entry))
                .collect();
            let variance = {
                let mean = act.iter().sum::<f64>() / act.len() as f64;
                act.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            };
            if variance <= 0.0 {
                return (
                    Vec::new(),
                    Some((entry, "zero activation variance in subsample".to_string())),
                );
            }
            let preds: Vec<f64> = subsample.iter().map(|&row| predictions[row]).collect();
            let prediction_rho = spearman(&act, &preds).ok();
            let mut rows = Vec::new();
            for (feature_index, (feature_name, values)) in features.columns.iter().enumerate() {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for (&row, &a) in subsample.iter().zip(&act) {
                    if let Some(v) = values[row] {
                        xs.push(a);
                        ys.push(v);
                    }
                }
                let n_used = xs.len();
                if n_used < 4 {
                    continue;
                }
                let rho = match spearman(&xs, &ys) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                let p_raw = match (&pvalue_mode, &null_tables[feature_index]) {
                    (PvalueMode::TApprox, _) => match spearman_pvalue(rho, n_used) {
                        Ok(p) => p.p,
                        Err(_) => continue,
                    },
                    (PvalueMode::Permutation { count }, Some(table)) => {
                        permutation_pvalue(table, rho.abs(), *count)
                    }
                    (PvalueMode::Permutation { .. }, None) => continue,
                };
                rows.push(ReportRow {
                    entry,
                    feature: feature_name.clone(),
                    rho,
                    p_raw,
                    p_adj: f64::NAN, // filled once the test count is known
                    n_used,
                    prediction_rho,
                });
            }
            (rows, None)
        });

    let mut rows = Vec::new();
    let mut skipped_entries = Vec::new();
    for (entry_rows, skipped) in per_entry {
        rows.extend(entry_rows);
        if let Some(s) = skipped {
            skipped_entries.push(s);
        }
    }
    let total_tests = rows.len();
    for row in rows.iter_mut() {
        row.p_adj = bonferroni(row.p_raw, total_tests);
    }
    rows.sort_by(|a, b| {
        b.rho
            .abs()
            .partial_cmp(&a.rho.abs())
            .unwrap()
            .then(a.entry.cmp(&b.entry))
            .then(a.feature.cmp(&b.feature))
    });
    Ok(CorrelationReport {
        rows,
        seed,
        total_tests,
        subsample,
        skipped_entries,
    })
}

/// Sorted multiset of tie-group sizes, identifying a rank pattern.
fn tie_signature(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut groups = Vec::new();
    let mut run = 1usize;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            groups.push(run);
            run = 1;
        }
    }
    groups.push(run);
    groups.sort_unstable();
    groups
}

fn fnv_key(signature: &[usize], n: usize) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64 ^ n as u64;
    for &g in signature {
        hash ^= g as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Sorted |rho| null table: Spearman of the fixed (possibly tied) value
/// ranks against a uniformly random untied ranking.
fn permutation_null_table(values: &[f64], count: usize, seed: u64) -> Vec<f64> {
    let n = values.len();
    let y_ranks = average_ranks(values);
    let mean = (n + 1) as f64 / 2.0;
    let syy: f64 = y_ranks.iter().map(|r| (r - mean) * (r - mean)).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut table = Vec::with_capacity(count);
    let sxx: f64 = (1..=n).map(|r| (r as f64 - mean) * (r as f64 - mean)).sum();
    for _ in 0..count {
        // Fisher-Yates
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        if syy <= 0.0 || sxx <= 0.0 {
            table.push(0.0);
            continue;
        }
        let mut sxy = 0.0;
        for (i, &p) in perm.iter().enumerate() {
            sxy += ((p + 1) as f64 - mean) * (y_ranks[i] - mean);
        }
        table.push((sxy / (sxx * syy).sqrt()).abs());
    }
    table.sort_by(|a, b| a.partial_cmp(b).unwrap());
    table
}

/// `(1 + #{null >= observed}) / (count + 1)`.
fn permutation_pvalue(sorted_abs_null: &[f64], observed_abs: f64, count: usize) -> f64 {
    let idx = sorted_abs_null.partition_point(|&v| v < observed_abs);
    let hits = sorted_abs_null.len() - idx;
    (1 + hits) as f64 / (count + 1) as f64
}
