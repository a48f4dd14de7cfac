use super::{ensure_dir, parallelism, resolve, write_json};
use crate::Common;
use sbkit_core::io::{read_pooled, save_checkpoint};
use sbkit_core::sae::{train_sae, SaeActivation, SaeTrainConfig, TemperatureSchedule};
use sbkit_core::tensor::ParamSet;
use sbkit_core::{par, Result};
use serde_json::json;
use std::path::Path;
use std::process::ExitCode;

pub fn defaults() -> Vec<(&'static str, String)> {
    let d = SaeTrainConfig::default();
    vec![
        ("seed", "0".into()),
        ("lr", d.lr.to_string()),
        ("lambda", d.lambda.to_string()),
        ("steps", d.steps.to_string()),
        ("batch", d.batch.to_string()),
        ("dict_size", d.dict_size.to_string()),
        ("activation", "mask".into()),
        ("tau_start", d.schedule.tau_start.to_string()),
        ("tau_end", d.schedule.tau_end.to_string()),
        ("anneal_steps", d.schedule.anneal_steps.to_string()),
        ("holdout_frac", d.holdout_frac.to_string()),
        ("decoder_norm", "1".into()),
    ]
}

pub fn sae_config(cfg: &crate::config::RunConfig) -> Result<SaeTrainConfig> {
    let decoder_norm = cfg.get_f64("decoder_norm")?;
    Ok(SaeTrainConfig {
        lr: cfg.get_f64("lr")?,
        lambda: cfg.get_f64("lambda")?,
        schedule: TemperatureSchedule {
            tau_start: cfg.get_f64("tau_start")?,
            tau_end: cfg.get_f64("tau_end")?,
            anneal_steps: cfg.get_u64("anneal_steps")?,
        },
        steps: cfg.get_u64("steps")?,
        batch: cfg.get_usize("batch")?,
        dict_size: cfg.get_usize("dict_size")?,
        seed: cfg.get_u64("seed")?,
        activation: SaeActivation::parse(cfg.get_str("activation"))?,
        holdout_frac: cfg.get_f64("holdout_frac")?,
        decoder_norm: if decoder_norm > 0.0 {
            Some(decoder_norm)
        } else {
            None
        },
    })
}

pub fn sae_meta(train_cfg: &SaeTrainConfig, n: usize) -> serde_json::Value {
    json!({
        "kind": "sae",
        "input_width": n,
        "dict_size": train_cfg.dict_size,
        "lambda": train_cfg.lambda,
        "lr": train_cfg.lr,
        "steps": train_cfg.steps,
        "batch": train_cfg.batch,
        "tau_start": train_cfg.schedule.tau_start,
        "tau_end": train_cfg.schedule.tau_end,
        "anneal_steps": train_cfg.schedule.anneal_steps,
        "activation": train_cfg.activation.as_str(),
        "seed": train_cfg.seed,
        "decoder_norm": train_cfg.decoder_norm,
    })
}

pub fn run(
    common: &Common,
    pooled_path: &Path,
    out: &Path,
    activation: Option<&str>,
    lambda: Option<f64>,
) -> Result<ExitCode> {
    let mut cfg = resolve(common, "train-sae", &defaults())?;
    if let Some(a) = activation {
        cfg.force_set("activation", a);
    }
    if let Some(l) = lambda {
        cfg.force_set("lambda", l);
    }
    ensure_dir(out)?;
    let (vectors, _ids) = read_pooled(pooled_path)?;
    let train_cfg = sae_config(&cfg)?;
    let (parallel, jobs) = parallelism(common);
    let outcome = par::with_threads(jobs, || train_sae(&vectors, &train_cfg, parallel))?;

    let meta = sae_meta(&train_cfg, vectors.cols());
    let tensors: Vec<(&str, &sbkit_core::tensor::Matrix)> = outcome
        .params
        .param_names()
        .into_iter()
        .map(|name| (name, &outcome.params.param(name).value))
        .collect();
    let checksum = save_checkpoint(&out.join("sae.sbck"), &meta, &tensors)?;

    let metrics = json!({
        "heldout_fidelity": outcome.heldout_fidelity,
        "mean_active": outcome.mean_active,
        "final_train_loss": outcome.final_train_loss,
        "holdout_count": outcome.holdout_indices.len(),
        "train_count": outcome.train_indices.len(),
        "checkpoint_checksum": format!("{checksum:016x}"),
        "config": meta,
    });
    write_json(&out.join("metrics.json"), &metrics)?;
    cfg.write_snapshot(out)?;
    println!(
        "trained sae: held-out fidelity {:.6}, mean active {:.2}",
        outcome.heldout_fidelity, outcome.mean_active
    );
    Ok(ExitCode::SUCCESS)
}
