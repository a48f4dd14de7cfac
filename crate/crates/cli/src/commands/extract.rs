use super::{parallelism, resolve};
use crate::Common;
use sbkit_core::dsp::{extract_features, read_wav, FEATURE_COLUMNS};
use sbkit_core::io::{read_manifest, write_csv, Label, SampleKind};
use sbkit_core::{par, CoreError, Result};
use std::path::Path;
use std::process::ExitCode;

fn defaults() -> Vec<(&'static str, String)> {
    vec![("seed", "0".into())]
}

pub fn run(common: &Common, manifest_path: &Path, out: &Path) -> Result<ExitCode> {
    let cfg = resolve(common, "extract-features", &defaults())?;
    let entries = read_manifest(manifest_path)?;
    if let Some(bad) = entries.iter().find(|e| e.kind != SampleKind::Wav) {
        return Err(CoreError::Input(format!(
            "feature extraction needs wav samples; '{}' has kind embedding",
            bad.id
        )));
    }
    let (parallel, jobs) = parallelism(common);
    let rows: Vec<Result<Vec<String>>> = par::with_threads(jobs, || {
        par::map_indexed(&entries, parallel, |_, entry| {
            let wave = read_wav(&entry.resolve(manifest_path))?;
            let features = extract_features(&wave)?;
            let mut row = vec![
                entry.id.clone(),
                entry.speaker.clone(),
                match entry.label {
                    Label::Pd => "PD".to_string(),
                    Label::Hc => "HC".to_string(),
                },
                format!("{:?}", entry.language),
                format!("{:?}", entry.sex),
            ];
            row.extend(
                features
                    .row()
                    .into_iter()
                    .map(|v| v.map_or(String::new(), |x| format!("{x}"))),
            );
            Ok(row)
        })
    });
    let rows: Vec<Vec<String>> = rows.into_iter().collect::<Result<_>>()?;
    let mut header = vec!["sample_id", "speaker_id", "label", "language", "sex"];
    header.extend(FEATURE_COLUMNS);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        super::ensure_dir(dir)?;
        cfg.write_snapshot(dir)?;
    }
    write_csv(out, &header, &rows)?;
    println!("wrote {} feature rows to {}", rows.len(), out.display());
    Ok(ExitCode::SUCCESS)
}
