use super::{ensure_dir, head_from_checkpoint, parallelism, resolve};
use crate::Common;
use sbkit_core::analysis::{
    correlate_dictionary, subject_covariate_corr, FeatureMatrix, REPORT_CSV_HEADER,
};
use sbkit_core::detector::{load_corpus, plain_frames};
use sbkit_core::io::{load_checkpoint, read_csv, read_manifest, write_csv};
use sbkit_core::sae::{encode_inference, SaeActivation, SaeParams};
use sbkit_core::tensor::{Matrix, ParamTensor};
use sbkit_core::{par, CoreError, Result};
use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;

fn defaults() -> Vec<(&'static str, String)> {
    vec![("seed", "0".into())]
}

pub fn sae_from_checkpoint(path: &Path) -> Result<(SaeParams, SaeActivation, f64)> {
    let ck = load_checkpoint(path)?;
    if ck.meta.get("kind").and_then(|v| v.as_str()) != Some("sae") {
        return Err(CoreError::Format {
            path: path.display().to_string(),
            reason: "not an sae checkpoint".into(),
        });
    }
    let mut params = SaeParams::new(1, 1, 0);
    params.w_e = ParamTensor::new(ck.tensor("w_e")?.clone());
    params.b_e = ParamTensor::new(ck.tensor("b_e")?.clone());
    params.w_m = ParamTensor::new(ck.tensor("w_m")?.clone());
    params.b_m = ParamTensor::new(ck.tensor("b_m")?.clone());
    params.w_d = ParamTensor::new(ck.tensor("w_d")?.clone());
    params.b_d = ParamTensor::new(ck.tensor("b_d")?.clone());
    let activation = SaeActivation::parse(
        ck.meta
            .get("activation")
            .and_then(|v| v.as_str())
            .unwrap_or("mask"),
    )?;
    let tau_end = ck.meta.get("tau_end").and_then(|v| v.as_f64()).unwrap_or(0.2);
    Ok((params, activation, tau_end))
}

const METADATA_COLUMNS: [&str; 5] = ["sample_id", "speaker_id", "label", "language", "sex"];

/// Feature CSV -> FeatureMatrix rows aligned to the manifest order, with
/// the demographic columns rank-encoded and appended.
fn feature_matrix_for(
    csv_path: &Path,
    ordered_ids: &[String],
    speakers: &[String],
) -> Result<FeatureMatrix> {
    let table = read_csv(csv_path)?;
    for column in METADATA_COLUMNS {
        if table.column_index(column).is_none() {
            return Err(CoreError::Input(format!(
                "feature csv is missing required column '{column}'"
            )));
        }
    }
    let id_col = table.column_index("sample_id").unwrap();
    let mut by_id: BTreeMap<&str, usize> = BTreeMap::new();
    for (row, fields) in table.rows.iter().enumerate() {
        by_id.insert(fields[id_col].as_str(), row);
    }
    let missing: Vec<&String> = ordered_ids
        .iter()
        .filter(|id| !by_id.contains_key(id.as_str()))
        .take(5)
        .collect();
    if !missing.is_empty() {
        return Err(CoreError::Input(format!(
            "feature csv has no rows for sample ids: {missing:?}"
        )));
    }

    let feature_names: Vec<(usize, String)> = table
        .header
        .iter()
        .enumerate()
        .filter(|(_, name)| !METADATA_COLUMNS.contains(&name.as_str()))
        .map(|(i, name)| (i, name.clone()))
        .collect();
    let mut columns: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for (col_idx, name) in &feature_names {
        let values: Vec<Option<f64>> = ordered_ids
            .iter()
            .map(|id| {
                let row = by_id[id.as_str()];
                let field = table.rows[row][*col_idx].trim();
                if field.is_empty() {
                    None
                } else {
                    field.parse::<f64>().ok()
                }
            })
            .collect();
        columns.push((name.clone(), values));
    }
    // rank-encoded demographics from the csv's own metadata
    for (name, encode) in [
        ("language", &(|v: &str| match v {
            "Fr" => Some(0.0),
            "En" => Some(1.0),
            _ => None,
        }) as &dyn Fn(&str) -> Option<f64>),
        ("sex", &|v: &str| match v {
            "M" => Some(0.0),
            "F" => Some(1.0),
            _ => None,
        }),
        ("label", &|v: &str| match v {
            "HC" => Some(0.0),
            "PD" => Some(1.0),
            _ => None,
        }),
    ] {
        let col = table.column_index(name).unwrap();
        let values: Vec<Option<f64>> = ordered_ids
            .iter()
            .map(|id| encode(table.rows[by_id[id.as_str()]][col].trim()))
            .collect();
        columns.push((name.to_string(), values));
    }
    FeatureMatrix::new(ordered_ids.to_vec(), speakers.to_vec(), columns)
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    common: &Common,
    sae_path: &Path,
    detector_path: &Path,
    features_path: &Path,
    manifest_path: &Path,
    out: &Path,
    covariate_csv: Option<&Path>,
) -> Result<ExitCode> {
    let cfg = resolve(common, "correlate", &defaults())?;
    ensure_dir(out)?;
    let head = head_from_checkpoint(detector_path)?;
    let (sae, activation, tau_end) = sae_from_checkpoint(sae_path)?;
    let entries = read_manifest(manifest_path)?;
    let corpus = load_corpus(manifest_path, &entries)?;
    let (parallel, jobs) = parallelism(common);

    let per_sample: Vec<Result<(Vec<f64>, f64)>> = par::with_threads(jobs, || {
        par::map_indexed(&corpus, parallel, |_, sample| {
            let frames = plain_frames(&sample.source)?;
            let fwd = head.forward_eval(&frames)?;
            let act = encode_inference(&sae, &fwd.pooled, activation, tau_end)?;
            Ok((act.f, fwd.prob))
        })
    });
    let mut activations = Matrix::zeros(corpus.len(), sae.dict_size());
    let mut predictions = Vec::with_capacity(corpus.len());
    for (i, result) in per_sample.into_iter().enumerate() {
        let (f, prob) = result?;
        activations.row_mut(i).copy_from_slice(&f);
        predictions.push(prob);
    }

    let ids: Vec<String> = corpus.iter().map(|s| s.meta.id.clone()).collect();
    let speakers: Vec<String> = corpus.iter().map(|s| s.meta.speaker.clone()).collect();
    let features = feature_matrix_for(features_path, &ids, &speakers)?;

    let seed = cfg.get_u64("seed")?;
    let report = par::with_threads(jobs, || {
        correlate_dictionary(&activations, &ids, &predictions, &features, seed, parallel)
    })?;
    write_csv(&out.join("report.csv"), &REPORT_CSV_HEADER, &report.csv_rows())?;
    if !report.skipped_entries.is_empty() {
        let rows: Vec<Vec<String>> = report
            .skipped_entries
            .iter()
            .map(|(entry, reason)| vec![entry.to_string(), reason.clone()])
            .collect();
        write_csv(&out.join("skipped_entries.csv"), &["entry", "reason"], &rows)?;
    }

    if let Some(cov_path) = covariate_csv {
        let table = read_csv(cov_path)?;
        let (sid, cname, cval) = (
            table
                .column_index("subject_id")
                .ok_or_else(|| CoreError::Input("covariate csv needs subject_id".into()))?,
            table
                .column_index("covariate_name")
                .ok_or_else(|| CoreError::Input("covariate csv needs covariate_name".into()))?,
            table
                .column_index("value")
                .ok_or_else(|| CoreError::Input("covariate csv needs value".into()))?,
        );
        let mut covariates: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for row in &table.rows {
            let value: f64 = row[cval].parse().map_err(|_| {
                CoreError::Input(format!("bad covariate value '{}'", row[cval]))
            })?;
            covariates
                .entry(row[cname].clone())
                .or_default()
                .insert(row[sid].clone(), value);
        }
        let mut rows = Vec::new();
        for (name, per_subject) in &covariates {
            let mut scores: Vec<(String, Vec<f64>)> = Vec::new();
            for entry in 0..sae.dict_size() {
                scores.push((
                    format!("entry_{entry}"),
                    (0..corpus.len()).map(|i| activations.at(i, entry)).collect(),
                ));
            }
            scores.push(("prediction".to_string(), predictions.clone()));
            for (fname, values) in &features.columns {
                if values.iter().all(Option::is_some) {
                    scores.push((
                        fname.clone(),
                        values.iter().map(|v| v.unwrap()).collect(),
                    ));
                }
            }
            for (score_name, values) in scores {
                match subject_covariate_corr(&values, &speakers, per_subject) {
                    Ok(r) => rows.push(vec![
                        name.clone(),
                        score_name,
                        format!("{}", r.rho),
                        format!("{:e}", r.p.p),
                        r.n_subjects.to_string(),
                    ]),
                    Err(_) => rows.push(vec![
                        name.clone(),
                        score_name,
                        String::new(),
                        String::new(),
                        "0".to_string(),
                    ]),
                }
            }
        }
        write_csv(
            &out.join("covariate_report.csv"),
            &["covariate", "score", "rho", "p_raw", "n_subjects"],
            &rows,
        )?;
    }

    cfg.write_snapshot(out)?;
    println!(
        "correlated {} tests ({} rows, {} entries skipped)",
        report.total_tests,
        report.rows.len(),
        report.skipped_entries.len()
    );
    Ok(ExitCode::SUCCESS)
}
