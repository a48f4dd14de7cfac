use super::{ensure_dir, parallelism, resolve, write_json};
use crate::Common;
use sbkit_core::detector::{
    corpus_frames, evaluate, load_corpus, train_detector, EvalReport, TrainConfig,
};
use sbkit_core::dsp::AugmentConfig;
use sbkit_core::io::{read_manifest, save_checkpoint};
use sbkit_core::tensor::ParamSet;
use sbkit_core::{par, Result};
use serde_json::json;
use std::path::Path;
use std::process::ExitCode;

fn defaults() -> Vec<(&'static str, String)> {
    let d = TrainConfig::default();
    vec![
        ("seed", "0".into()),
        ("lr_peak", d.lr_peak.to_string()),
        ("epochs", d.epochs.to_string()),
        ("warmup_epochs", d.warmup_epochs.to_string()),
        ("samples_per_epoch", d.samples_per_epoch.to_string()),
        ("batch", d.batch.to_string()),
        ("hidden", d.hidden.to_string()),
        ("hidden2", d.hidden2.to_string()),
        ("weight_majority", d.weight_majority.to_string()),
        ("weight_minority", d.weight_minority.to_string()),
        ("augment_prob", "0.9".into()),
        ("snr_lo", "0".into()),
        ("snr_hi", "15".into()),
    ]
}

fn eval_json(report: &EvalReport) -> serde_json::Value {
    let per_language: serde_json::Map<String, serde_json::Value> = report
        .per_language
        .iter()
        .map(|(lang, (f1, c))| {
            (
                lang.clone(),
                json!({
                    "f1": f1,
                    "tp": c.tp, "fp": c.fp, "fn": c.fn_, "tn": c.tn,
                }),
            )
        })
        .collect();
    json!({
        "f1": report.f1,
        "tp": report.confusion.tp,
        "fp": report.confusion.fp,
        "fn": report.confusion.fn_,
        "tn": report.confusion.tn,
        "per_language": per_language,
    })
}

pub fn run(
    common: &Common,
    manifest_path: &Path,
    eval_manifest: Option<&Path>,
    out: &Path,
) -> Result<ExitCode> {
    let cfg = resolve(common, "train-detector", &defaults())?;
    ensure_dir(out)?;
    let entries = read_manifest(manifest_path)?;
    let corpus = load_corpus(manifest_path, &entries)?;

    let train_cfg = TrainConfig {
        lr_peak: cfg.get_f64("lr_peak")?,
        epochs: cfg.get_usize("epochs")?,
        warmup_epochs: cfg.get_usize("warmup_epochs")?,
        samples_per_epoch: cfg.get_usize("samples_per_epoch")?,
        batch: cfg.get_usize("batch")?,
        weight_majority: cfg.get_f64("weight_majority")?,
        weight_minority: cfg.get_f64("weight_minority")?,
        hidden: cfg.get_usize("hidden")?,
        hidden2: cfg.get_usize("hidden2")?,
        augment: AugmentConfig {
            apply_probability: cfg.get_f64("augment_prob")?,
            snr_db_range: (cfg.get_f64("snr_lo")?, cfg.get_f64("snr_hi")?),
            ..AugmentConfig::default()
        },
        seed: cfg.get_u64("seed")?,
    };

    let (parallel, jobs) = parallelism(common);
    let outcome = par::with_threads(jobs, || train_detector(&corpus, &train_cfg, parallel))?;
    let head = &outcome.head;

    let meta = json!({
        "kind": "detector",
        "input_width": head.input_width(),
        "hidden": head.hidden(),
        "hidden2": head.hidden2(),
        "dropout": head.dropout_rate,
        "leaky_slope": head.leaky_slope,
        "seed": train_cfg.seed,
        "adam": {"beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8},
    });
    let tensors: Vec<(&str, &sbkit_core::tensor::Matrix)> = head
        .param_names()
        .into_iter()
        .map(|name| (name, &head.param(name).value))
        .collect();
    let checksum = save_checkpoint(&out.join("detector.sbck"), &meta, &tensors)?;

    let eval = if let Some(eval_path) = eval_manifest {
        let eval_entries = read_manifest(eval_path)?;
        let eval_corpus = load_corpus(eval_path, &eval_entries)?;
        let frames = par::with_threads(jobs, || corpus_frames(&eval_corpus, parallel))?;
        let set: Vec<_> = eval_corpus
            .iter()
            .map(|s| s.meta.clone())
            .zip(frames)
            .collect();
        Some(evaluate(head, &set)?)
    } else {
        None
    };

    let metrics = json!({
        "epochs": outcome
            .history
            .iter()
            .map(|e| json!({"loss": e.loss, "f1": e.f1}))
            .collect::<Vec<_>>(),
        "final_train": eval_json(&outcome.final_train_eval),
        "eval": eval.as_ref().map(eval_json),
        "checkpoint_checksum": format!("{checksum:016x}"),
        "seed": train_cfg.seed,
    });
    write_json(&out.join("metrics.json"), &metrics)?;
    cfg.write_snapshot(out)?;
    println!(
        "trained detector: train F1 {:?}, checkpoint {:016x}",
        outcome.final_train_eval.f1, checksum
    );
    Ok(ExitCode::SUCCESS)
}
