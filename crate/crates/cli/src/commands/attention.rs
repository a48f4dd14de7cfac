use super::{ensure_dir, frame_energy, head_from_checkpoint, parallelism, resolve};
use crate::Common;
use sbkit_core::analysis::{attention_energy_xcorr, AnticorrConfig};
use sbkit_core::detector::{load_corpus, plain_frames, SampleSource};
use sbkit_core::dsp::{spectral_flux, stft_magnitude, HOP_S, WINDOW_S};
use sbkit_core::io::{read_manifest, write_csv};
use sbkit_core::{par, Result};
use std::path::Path;
use std::process::ExitCode;

fn defaults() -> Vec<(&'static str, String)> {
    let d = AnticorrConfig::default();
    vec![
        ("seed", "0".into()),
        ("smooth_frames", d.smooth_window_frames.to_string()),
        ("threshold_rel", d.active_threshold_rel.to_string()),
        ("max_lag", d.max_lag_frames.to_string()),
    ]
}

pub fn run(
    common: &Common,
    detector_path: &Path,
    manifest_path: &Path,
    out: &Path,
) -> Result<ExitCode> {
    let cfg = resolve(common, "attention-report", &defaults())?;
    ensure_dir(out)?;
    let traces_dir = out.join("traces");
    ensure_dir(&traces_dir)?;

    let head = head_from_checkpoint(detector_path)?;
    let entries = read_manifest(manifest_path)?;
    let corpus = load_corpus(manifest_path, &entries)?;
    let anticorr = AnticorrConfig {
        smooth_window_frames: cfg.get_usize("smooth_frames")?,
        active_threshold_rel: cfg.get_f64("threshold_rel")?,
        max_lag_frames: cfg.get_usize("max_lag")?,
    };
    let (parallel, jobs) = parallelism(common);

    type SampleOut = (Vec<f64>, Vec<f64>, Option<f64>, String, Option<f64>);
    let results: Vec<Result<SampleOut>> = par::with_threads(jobs, || {
        par::map_indexed(&corpus, parallel, |_, sample| {
            let frames = plain_frames(&sample.source)?;
            let fwd = head.forward_eval(&frames)?;
            let energy = frame_energy(sample, &frames)?;
            let (r0, flag) = match attention_energy_xcorr(&fwd.attention, &energy, &anticorr)? {
                Ok(r) => (Some(r.r0), String::new()),
                Err(undefined) => (None, format!("undefined: {undefined}")),
            };
            // attention-weighted spectral flux for audio inputs
            let flux = match &sample.source {
                SampleSource::Wav(w) => {
                    let spectra = stft_magnitude(w, WINDOW_S, HOP_S)?;
                    Some(spectral_flux(&spectra, Some(&fwd.attention))?)
                }
                SampleSource::Embedding(_) => None,
            };
            Ok((fwd.attention, energy, r0, flag, flux))
        })
    });

    let mut rows = Vec::with_capacity(corpus.len());
    for (i, result) in results.into_iter().enumerate() {
        let (attention, energy, r0, flag, flux) = result?;
        let id = &corpus[i].meta.id;
        let trace_rows: Vec<Vec<String>> = attention
            .iter()
            .zip(&energy)
            .enumerate()
            .map(|(t, (a, e))| vec![t.to_string(), format!("{a}"), format!("{e}")])
            .collect();
        write_csv(
            &traces_dir.join(format!("{id}.csv")),
            &["frame", "attention", "energy"],
            &trace_rows,
        )?;
        rows.push(vec![
            id.clone(),
            r0.map_or(String::new(), |v| format!("{v}")),
            attention.len().to_string(),
            flux.map_or(String::new(), |v| format!("{v}")),
            flag,
        ]);
    }
    write_csv(
        &out.join("summary.csv"),
        &["sample_id", "correlation", "n_frames", "flux_weighted", "flag"],
        &rows,
    )?;
    cfg.write_snapshot(out)?;
    println!("wrote attention report for {} samples", rows.len());
    Ok(ExitCode::SUCCESS)
}
