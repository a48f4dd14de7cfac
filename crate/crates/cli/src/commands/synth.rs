use super::{ensure_dir, resolve};
use crate::Common;
use sbkit_core::io::{write_csv, write_embeddings, write_manifest, Label, ManifestEntry, SampleKind};
use sbkit_core::synth::{generate_corpus, planted_feature_columns, wav_sample, LabelRule, SynthConfig};
use sbkit_core::dsp::write_wav;
use sbkit_core::{mix_seed, CoreError, Result};
use std::path::Path;
use std::process::ExitCode;

fn defaults() -> Vec<(&'static str, String)> {
    let d = SynthConfig::default();
    vec![
        ("seed", "0".into()),
        ("kind", "embedding".into()),
        ("n_speakers", d.n_speakers.to_string()),
        ("samples_per_speaker", d.samples_per_speaker.to_string()),
        ("t_lo", d.t_range.0.to_string()),
        ("t_hi", d.t_range.1.to_string()),
        ("n_dims", d.n_dims.to_string()),
        ("k_factors", d.k_factors.to_string()),
        ("factor_sparsity", d.factor_sparsity.to_string()),
        ("intensity_lo", d.intensity_range.0.to_string()),
        ("intensity_hi", d.intensity_range.1.to_string()),
        ("factor_gain", d.factor_gain.to_string()),
        ("factor_gain_decay", d.factor_gain_decay.to_string()),
        ("signed_factors", d.signed_factors.to_string()),
        ("span_frac", d.span_frac.to_string()),
        ("noise_std", d.noise_std.to_string()),
        ("speaker_offset_std", d.speaker_offset_std.to_string()),
        ("label_rule", "factor_threshold".into()),
        ("label_factor", "0".into()),
        ("label_threshold", "0.25".into()),
        ("test_frac", "0.2".into()),
        ("noise_features", "8".into()),
        ("wav_seconds", "6".into()),
    ]
}

pub fn run(common: &Common, out: &Path, kind: Option<&str>, force: bool) -> Result<ExitCode> {
    let mut cfg = resolve(common, "synth", &defaults())?;
    if let Some(kind) = kind {
        cfg.force_set("kind", kind);
    }
    let kind = match cfg.get_str("kind") {
        "embedding" => SampleKind::Embedding,
        "wav" => SampleKind::Wav,
        other => {
            return Err(CoreError::Config(format!(
                "kind must be 'embedding' or 'wav', found '{other}'"
            )))
        }
    };
    if out.exists() && out.read_dir().map(|mut d| d.next().is_some()).unwrap_or(false) && !force {
        return Err(CoreError::Config(format!(
            "output directory {} is not empty (use --force to overwrite)",
            out.display()
        )));
    }
    ensure_dir(out)?;

    let label_rule = match cfg.get_str("label_rule") {
        "factor_threshold" => LabelRule::FactorThreshold {
            factor: cfg.get_usize("label_factor")?,
            threshold: cfg.get_f64("label_threshold")?,
        },
        "random" => LabelRule::Random,
        other => {
            return Err(CoreError::Config(format!(
                "label_rule must be 'factor_threshold' or 'random', found '{other}'"
            )))
        }
    };
    let synth_cfg = SynthConfig {
        n_speakers: cfg.get_usize("n_speakers")?,
        samples_per_speaker: cfg.get_usize("samples_per_speaker")?,
        t_range: (cfg.get_usize("t_lo")?, cfg.get_usize("t_hi")?),
        n_dims: cfg.get_usize("n_dims")?,
        k_factors: cfg.get_usize("k_factors")?,
        factor_sparsity: cfg.get_f64("factor_sparsity")?,
        intensity_range: (cfg.get_f64("intensity_lo")?, cfg.get_f64("intensity_hi")?),
        factor_gain: cfg.get_f64("factor_gain")?,
        factor_gain_decay: cfg.get_f64("factor_gain_decay")?,
        signed_factors: cfg.get_bool("signed_factors")?,
        span_frac: cfg.get_f64("span_frac")?,
        noise_std: cfg.get_f64("noise_std")?,
        speaker_offset_std: cfg.get_f64("speaker_offset_std")?,
        label_rule,
        seed: cfg.get_u64("seed")?,
    };
    let corpus = generate_corpus(&synth_cfg)?;

    let data_dir = out.join(match kind {
        SampleKind::Embedding => "embeddings",
        SampleKind::Wav => "wavs",
    });
    ensure_dir(&data_dir)?;

    let mut entries = Vec::with_capacity(corpus.samples.len());
    for (idx, sample) in corpus.samples.iter().enumerate() {
        let rel = match kind {
            SampleKind::Embedding => {
                let rel = format!("embeddings/{}.sbem", sample.meta.id);
                write_embeddings(&out.join(&rel), &sample.frames)?;
                rel
            }
            SampleKind::Wav => {
                let rel = format!("wavs/{}.wav", sample.meta.id);
                let speaker_idx: usize = sample.meta.speaker[3..].parse().unwrap_or(0);
                let f0 = 110.0 + 15.0 * (speaker_idx % 8) as f64;
                let wave = wav_sample(
                    f0,
                    sample.meta.label == Label::Pd,
                    cfg.get_f64("wav_seconds")?,
                    mix_seed(synth_cfg.seed, 0x7a + idx as u64),
                );
                write_wav(&out.join(&rel), &wave)?;
                rel
            }
        };
        entries.push(ManifestEntry {
            id: sample.meta.id.clone(),
            speaker: sample.meta.speaker.clone(),
            label: sample.meta.label,
            language: sample.meta.language,
            sex: sample.meta.sex,
            path: rel,
            kind,
        });
    }
    write_manifest(&out.join("manifest.jsonl"), &entries)?;
    let (train_idx, test_idx) = corpus.train_test_split(cfg.get_f64("test_frac")?);
    let pick = |idx: &[usize]| -> Vec<ManifestEntry> { idx.iter().map(|&i| entries[i].clone()).collect() };
    write_manifest(&out.join("manifest_train.jsonl"), &pick(&train_idx))?;
    write_manifest(&out.join("manifest_test.jsonl"), &pick(&test_idx))?;

    // ground truth for verification and analysis demos
    let k = corpus.directions.rows();
    let mut truth_rows = Vec::new();
    for sample in &corpus.samples {
        let mut row = vec![sample.meta.id.clone()];
        row.extend(sample.pooled_coefficients.iter().map(|c| format!("{c}")));
        truth_rows.push(row);
    }
    let truth_header: Vec<String> = std::iter::once("sample_id".to_string())
        .chain((0..k).map(|f| format!("factor{f}")))
        .collect();
    write_csv(
        &out.join("truth_factors.csv"),
        &truth_header.iter().map(String::as_str).collect::<Vec<_>>(),
        &truth_rows,
    )?;
    write_embeddings(&out.join("directions.sbem"), &corpus.directions)?;

    if kind == SampleKind::Embedding {
        // planted factor proxies + independent noise columns for the
        // correlate pipeline
        let columns = planted_feature_columns(
            &corpus,
            cfg.get_usize("noise_features")?,
            mix_seed(synth_cfg.seed, 0xfe),
        );
        let mut header = vec![
            "sample_id".to_string(),
            "speaker_id".to_string(),
            "label".to_string(),
            "language".to_string(),
            "sex".to_string(),
        ];
        header.extend(columns.iter().map(|(name, _)| name.clone()));
        let mut rows = Vec::new();
        for (i, sample) in corpus.samples.iter().enumerate() {
            let mut row = vec![
                sample.meta.id.clone(),
                sample.meta.speaker.clone(),
                match sample.meta.label {
                    Label::Pd => "PD".to_string(),
                    Label::Hc => "HC".to_string(),
                },
                format!("{:?}", sample.meta.language),
                format!("{:?}", sample.meta.sex),
            ];
            for (_, values) in &columns {
                row.push(values[i].map_or(String::new(), |v| format!("{v}")));
            }
            rows.push(row);
        }
        write_csv(
            &out.join("features.csv"),
            &header.iter().map(String::as_str).collect::<Vec<_>>(),
            &rows,
        )?;
    }

    cfg.write_snapshot(out)?;
    println!(
        "wrote {} samples ({} train, {} test) to {}",
        entries.len(),
        train_idx.len(),
        test_idx.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}
