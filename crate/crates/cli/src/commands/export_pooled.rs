use super::{ensure_dir, frame_energy, head_from_checkpoint, parallelism, resolve};
use crate::Common;
use sbkit_core::detector::{load_corpus, plain_frames};
use sbkit_core::io::{read_manifest, write_csv, write_pooled};
use sbkit_core::tensor::Matrix;
use sbkit_core::{par, Result};
use std::path::Path;
use std::process::ExitCode;

fn defaults() -> Vec<(&'static str, String)> {
    vec![("seed", "0".into())]
}

pub fn run(
    common: &Common,
    checkpoint: &Path,
    manifest_path: &Path,
    out: &Path,
) -> Result<ExitCode> {
    let cfg = resolve(common, "export-pooled", &defaults())?;
    ensure_dir(out)?;
    let traces_dir = out.join("traces");
    ensure_dir(&traces_dir)?;

    let head = head_from_checkpoint(checkpoint)?;
    let entries = read_manifest(manifest_path)?;
    let corpus = load_corpus(manifest_path, &entries)?;
    let (parallel, jobs) = parallelism(common);

    let results: Vec<Result<(Vec<f64>, Vec<f64>, Vec<f64>)>> = par::with_threads(jobs, || {
        par::map_indexed(&corpus, parallel, |_, sample| {
            let frames = plain_frames(&sample.source)?;
            let fwd = head.forward_eval(&frames)?;
            let energy = frame_energy(sample, &frames)?;
            Ok((fwd.pooled, fwd.attention, energy))
        })
    });

    let mut pooled = Matrix::zeros(corpus.len(), head.hidden());
    let mut ids = Vec::with_capacity(corpus.len());
    for (i, result) in results.into_iter().enumerate() {
        let (vector, attention, energy) = result?;
        pooled.row_mut(i).copy_from_slice(&vector);
        ids.push(corpus[i].meta.id.clone());

        let rows: Vec<Vec<String>> = attention
            .iter()
            .zip(&energy)
            .enumerate()
            .map(|(t, (a, e))| vec![t.to_string(), format!("{a}"), format!("{e}")])
            .collect();
        write_csv(
            &traces_dir.join(format!("{}.csv", corpus[i].meta.id)),
            &["frame", "attention", "energy"],
            &rows,
        )?;
    }
    write_pooled(&out.join("pooled.sbpx"), &pooled, &ids)?;
    cfg.write_snapshot(out)?;
    println!(
        "exported {} pooled vectors of width {}",
        pooled.rows(),
        pooled.cols()
    );
    Ok(ExitCode::SUCCESS)
}
