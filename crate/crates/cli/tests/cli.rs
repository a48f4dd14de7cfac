//! Command-line behavior: exit codes, validation errors, and the crafted
//! attention controls.

use sbkit_core::io::save_checkpoint;
use sbkit_core::tensor::Matrix;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sbkit")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().expect("spawn sbkit");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn synth_small(out: &Path, extra: &[&str]) {
    let mut args = vec![
        "synth",
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "7",
        "--set",
        "n_speakers=8",
        "--set",
        "samples_per_speaker=4",
    ];
    args.extend_from_slice(extra);
    let (code, _, err) = run(&args);
    assert_eq!(code, 0, "synth failed: {err}");
}

#[test]
fn unknown_config_key_exits_1_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&[
        "synth",
        "--out",
        dir.path().join("x").to_str().unwrap(),
        "--set",
        "bogus_key=1",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("bogus_key"), "stderr: {err}");
}

#[test]
fn synth_refuses_nonempty_output_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("corpus");
    synth_small(&out, &[]);
    let (code, _, err) = run(&["synth", "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(code, 1);
    assert!(err.contains("--force"), "stderr: {err}");
    let (code, _, _) = run(&[
        "synth", "--out", out.to_str().unwrap(), "--seed", "7", "--force",
        "--set", "n_speakers=8", "--set", "samples_per_speaker=4",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn gradcheck_detects_injected_errors() {
    let (code, stdout, _) = run(&["gradcheck"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("all gradients within"));
    let (code, stdout, _) = run(&["gradcheck", "--inject-error"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("FAIL"));
}

#[test]
fn extract_features_rejects_embedding_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    synth_small(&corpus, &[]);
    let (code, _, err) = run(&[
        "extract-features",
        "--manifest",
        corpus.join("manifest.jsonl").to_str().unwrap(),
        "--out",
        dir.path().join("f.csv").to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("embedding"), "stderr: {err}");
}

#[test]
fn training_refuses_single_class_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    // threshold no intensity can exceed: every label is HC
    synth_small(&corpus, &["--set", "label_threshold=10"]);
    let (code, _, err) = run(&[
        "train-detector",
        "--manifest",
        corpus.join("manifest.jsonl").to_str().unwrap(),
        "--out",
        dir.path().join("det").to_str().unwrap(),
        "--set",
        "epochs=1",
        "--set",
        "warmup_epochs=0",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("PD"), "stderr: {err}");
}

#[test]
fn wav_pipeline_extracts_all_feature_columns() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("wavs");
    synth_small(
        &corpus,
        &["--kind", "wav", "--set", "n_speakers=4", "--set", "wav_seconds=3"],
    );
    let csv = dir.path().join("features/features.csv");
    let (code, _, err) = run(&[
        "extract-features",
        "--manifest",
        corpus.join("manifest.jsonl").to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "-j",
        "2",
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let header = text.lines().next().unwrap();
    for column in sbkit_core::dsp::FEATURE_COLUMNS {
        assert!(header.contains(column), "missing column {column}");
    }
    // every wav row parsed; voiced features present for synthetic speech
    assert_eq!(text.lines().count(), 1 + 4 * 4);
}

/// Write a hand-crafted detector checkpoint whose attention scorer tracks
/// (+1) or anti-tracks (-1) frame loudness of non-negative embeddings.
fn crafted_head(path: &Path, n: usize, sign: f64) {
    let w1 = Matrix::identity(n);
    let b1 = Matrix::zeros(n, 1);
    let attn: Vec<f64> = vec![sign * 30.0 / n as f64; n];
    let attn_v = Matrix::column(&attn);
    let w2 = Matrix::zeros(2, n);
    let b2 = Matrix::zeros(2, 1);
    let w_out = Matrix::zeros(2, 1);
    let b_out = Matrix::zeros(1, 1);
    let meta = json!({
        "kind": "detector",
        "input_width": n,
        "hidden": n,
        "hidden2": 2,
        "dropout": 0.2,
        "leaky_slope": 0.01,
    });
    save_checkpoint(
        path,
        &meta,
        &[
            ("w1", &w1),
            ("b1", &b1),
            ("attn_v", &attn_v),
            ("w2", &w2),
            ("b2", &b2),
            ("w_out", &w_out),
            ("b_out", &b_out),
        ],
    )
    .unwrap();
}

fn mean_correlation(summary_csv: &Path) -> (f64, usize) {
    let text = std::fs::read_to_string(summary_csv).unwrap();
    let mut values = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if let Ok(v) = fields[1].parse::<f64>() {
            values.push(v);
        }
    }
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    (mean, values.len())
}

#[test]
fn attention_report_controls_have_the_expected_signs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    // unsigned factors keep span frames loud and non-negative on average
    synth_small(
        &corpus,
        &[
            "--set", "signed_factors=false", "--set", "factor_sparsity=0.9",
            "--set", "noise_std=0.05", "--set", "speaker_offset_std=0.01",
        ],
    );
    let manifest = corpus.join("manifest.jsonl");
    let mut results = Vec::new();
    for (tag, sign) in [("neg", -1.0), ("pos", 1.0)] {
        let ck: PathBuf = dir.path().join(format!("{tag}.sbck"));
        crafted_head(&ck, 64, sign);
        let out = dir.path().join(format!("att_{tag}"));
        let (code, _, err) = run(&[
            "attention-report",
            "--detector",
            ck.to_str().unwrap(),
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {err}");
        results.push(mean_correlation(&out.join("summary.csv")));
    }
    let (neg_mean, neg_count) = results[0];
    let (pos_mean, pos_count) = results[1];
    assert!(neg_count > 20 && pos_count > 20);
    assert!(neg_mean < -0.3, "low-energy attention mean {neg_mean}");
    assert!(pos_mean > 0.3, "energy-tracking attention mean {pos_mean}");
}

#[test]
fn correlate_rejects_features_from_another_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_a = dir.path().join("a");
    let corpus_b = dir.path().join("b");
    synth_small(&corpus_a, &[]);
    synth_small(&corpus_b, &["--set", "n_speakers=4"]);
    // minimal real checkpoints
    let det = dir.path().join("det");
    let (code, _, err) = run(&[
        "train-detector",
        "--manifest",
        corpus_a.join("manifest.jsonl").to_str().unwrap(),
        "--out",
        det.to_str().unwrap(),
        "--set",
        "epochs=1",
        "--set",
        "warmup_epochs=0",
        "--set",
        "samples_per_epoch=32",
        "--set",
        "batch=8",
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let pooled = dir.path().join("pooled");
    let (code, _, _) = run(&[
        "export-pooled",
        "--checkpoint",
        det.join("detector.sbck").to_str().unwrap(),
        "--manifest",
        corpus_a.join("manifest.jsonl").to_str().unwrap(),
        "--out",
        pooled.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let sae = dir.path().join("sae");
    let (code, _, _) = run(&[
        "train-sae",
        "--pooled",
        pooled.join("pooled.sbpx").to_str().unwrap(),
        "--out",
        sae.to_str().unwrap(),
        "--set",
        "steps=50",
        "--set",
        "dict_size=8",
    ]);
    assert_eq!(code, 0);
    let (code, _, err) = run(&[
        "correlate",
        "--sae",
        sae.join("sae.sbck").to_str().unwrap(),
        "--detector",
        det.join("detector.sbck").to_str().unwrap(),
        "--features",
        corpus_b.join("features.csv").to_str().unwrap(),
        "--manifest",
        corpus_a.join("manifest.jsonl").to_str().unwrap(),
        "--out",
        dir.path().join("corr").to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("sample ids"), "stderr: {err}");
}

#[test]
fn non_finite_training_data_exits_2_with_the_step() {
    use sbkit_core::io::{write_embeddings, write_manifest, Label, Language, ManifestEntry, SampleKind, Sex};
    let dir = tempfile::tempdir().unwrap();
    let mut entries = Vec::new();
    for i in 0..8 {
        let mut data = vec![0.1; 3 * 4];
        if i == 0 {
            data[5] = f64::NAN;
        }
        let frames = Matrix::from_vec(3, 4, data).unwrap();
        let rel = format!("e{i}.sbem");
        write_embeddings(&dir.path().join(&rel), &frames).unwrap();
        entries.push(ManifestEntry {
            id: format!("s{i}"),
            speaker: format!("spk{i}"),
            label: if i % 2 == 0 { Label::Pd } else { Label::Hc },
            language: Language::Fr,
            sex: if (i / 2) % 2 == 0 { Sex::M } else { Sex::F },
            path: rel,
            kind: SampleKind::Embedding,
        });
    }
    let manifest = dir.path().join("manifest.jsonl");
    write_manifest(&manifest, &entries).unwrap();
    let (code, _, err) = run(&[
        "train-detector",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("det").to_str().unwrap(),
        "--set",
        "epochs=1",
        "--set",
        "warmup_epochs=0",
        "--set",
        "samples_per_epoch=32",
        "--set",
        "batch=8",
    ]);
    assert_eq!(code, 2, "stderr: {err}");
    assert!(err.contains("step"), "stderr: {err}");
}

#[test]
fn silent_audio_extracts_with_missing_markers() {
    use sbkit_core::dsp::{write_wav, Waveform, TARGET_SAMPLE_RATE};
    use sbkit_core::io::{write_manifest, Label, Language, ManifestEntry, SampleKind, Sex};
    let dir = tempfile::tempdir().unwrap();
    let silent = Waveform::new(vec![0.0; TARGET_SAMPLE_RATE as usize], TARGET_SAMPLE_RATE);
    write_wav(&dir.path().join("quiet.wav"), &silent).unwrap();
    write_manifest(
        &dir.path().join("manifest.jsonl"),
        &[ManifestEntry {
            id: "quiet".into(),
            speaker: "spk0".into(),
            label: Label::Hc,
            language: Language::En,
            sex: Sex::F,
            path: "quiet.wav".into(),
            kind: SampleKind::Wav,
        }],
    )
    .unwrap();
    let csv = dir.path().join("features.csv");
    let (code, _, err) = run(&[
        "extract-features",
        "--manifest",
        dir.path().join("manifest.jsonl").to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    assert!(row[col("f0_mean")].is_empty(), "voiced feature should be missing");
    assert!(row[col("hnr_db")].is_empty());
    assert_eq!(row[col("nonspeech_ratio")], "1");
}

#[test]
fn wav_training_with_augmentation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("wavs");
    synth_small(
        &corpus,
        &["--kind", "wav", "--set", "n_speakers=8", "--set", "samples_per_speaker=3",
          "--set", "wav_seconds=3"],
    );
    let train = |out: &Path| {
        let (code, _, err) = run(&[
            "train-detector",
            "--manifest",
            corpus.join("manifest.jsonl").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "5",
            "-j",
            "2",
            "--set",
            "epochs=2",
            "--set",
            "warmup_epochs=1",
            "--set",
            "samples_per_epoch=32",
            "--set",
            "batch=8",
        ]);
        assert_eq!(code, 0, "stderr: {err}");
        std::fs::read(out.join("detector.sbck")).unwrap()
    };
    let a = train(&dir.path().join("det_a"));
    let b = train(&dir.path().join("det_b"));
    assert_eq!(a, b, "augmented wav training must be seed-reproducible");
}

#[test]
fn covariate_report_scores_a_planted_covariate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    synth_small(&corpus, &[]);
    let det = dir.path().join("det");
    let (code, _, err) = run(&[
        "train-detector",
        "--manifest", corpus.join("manifest.jsonl").to_str().unwrap(),
        "--out", det.to_str().unwrap(),
        "--set", "epochs=1", "--set", "warmup_epochs=0",
        "--set", "samples_per_epoch=32", "--set", "batch=8",
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let pooled = dir.path().join("pooled");
    assert_eq!(
        run(&[
            "export-pooled",
            "--checkpoint", det.join("detector.sbck").to_str().unwrap(),
            "--manifest", corpus.join("manifest.jsonl").to_str().unwrap(),
            "--out", pooled.to_str().unwrap(),
        ]).0,
        0
    );
    let sae = dir.path().join("sae");
    assert_eq!(
        run(&[
            "train-sae",
            "--pooled", pooled.join("pooled.sbpx").to_str().unwrap(),
            "--out", sae.to_str().unwrap(),
            "--set", "steps=50", "--set", "dict_size=8",
        ]).0,
        0
    );

    // covariate equal to each speaker's mean of the planted factor0 proxy
    let features = std::fs::read_to_string(corpus.join("features.csv")).unwrap();
    let header: Vec<&str> = features.lines().next().unwrap().split(',').collect();
    let spk_col = header.iter().position(|h| *h == "speaker_id").unwrap();
    let proxy_col = header.iter().position(|h| *h == "factor0_proxy").unwrap();
    let mut sums: std::collections::BTreeMap<String, (f64, usize)> = Default::default();
    for line in features.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let value: f64 = fields[proxy_col].parse().unwrap();
        let entry = sums.entry(fields[spk_col].to_string()).or_insert((0.0, 0));
        entry.0 += value;
        entry.1 += 1;
    }
    let mut covariate_rows = vec!["subject_id,covariate_name,value".to_string()];
    for (spk, (sum, count)) in &sums {
        covariate_rows.push(format!("{spk},proxy_mean,{}", sum / *count as f64));
    }
    let cov_path = dir.path().join("covariates.csv");
    std::fs::write(&cov_path, covariate_rows.join("\n") + "\n").unwrap();

    let corr = dir.path().join("corr");
    let (code, _, err) = run(&[
        "correlate",
        "--sae", sae.join("sae.sbck").to_str().unwrap(),
        "--detector", det.join("detector.sbck").to_str().unwrap(),
        "--features", corpus.join("features.csv").to_str().unwrap(),
        "--manifest", corpus.join("manifest.jsonl").to_str().unwrap(),
        "--out", corr.to_str().unwrap(),
        "--covariate-csv", cov_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let report = std::fs::read_to_string(corr.join("covariate_report.csv")).unwrap();
    assert!(report.lines().next().unwrap().starts_with("covariate,score,rho"));
    // the planted covariate is the per-subject mean of factor0_proxy
    let planted: Vec<&str> = report
        .lines()
        .filter(|l| l.starts_with("proxy_mean,factor0_proxy,"))
        .collect();
    assert_eq!(planted.len(), 1);
    let rho: f64 = planted[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!(rho > 0.99, "planted covariate rho {rho}");
}
