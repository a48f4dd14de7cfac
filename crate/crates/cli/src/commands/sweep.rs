use super::{ensure_dir, parallelism, resolve};
use crate::Common;
use sbkit_core::io::{read_pooled, write_csv};
use sbkit_core::sae::{lambda_sweep, sweep_rows, SWEEP_CSV_HEADER};
use sbkit_core::{par, CoreError, Result};
use std::path::Path;
use std::process::ExitCode;

fn defaults() -> Vec<(&'static str, String)> {
    let mut d = super::train_sae::defaults();
    d.retain(|(k, _)| !matches!(*k, "lambda" | "activation"));
    d.push(("lambdas", "0.03,0.01,0.003,0.001".into()));
    d.push(("trials", "4".into()));
    d
}

pub fn run(common: &Common, pooled_path: &Path, out: &Path) -> Result<ExitCode> {
    let cfg = resolve(common, "sweep-lambda", &defaults())?;
    ensure_dir(out)?;
    let (vectors, _ids) = read_pooled(pooled_path)?;

    let lambdas: Vec<f64> = cfg
        .get_str("lambdas")
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CoreError::Config(format!("bad lambda '{s}'")))
        })
        .collect::<Result<_>>()?;
    let trials = cfg.get_u64("trials")?;
    if lambdas.is_empty() || trials == 0 {
        return Err(CoreError::Config("need at least one lambda and one trial".into()));
    }
    let seeds: Vec<u64> = (0..trials).collect();

    // base config reuses the train-sae keys; lambda and activation come
    // from the grid itself
    let base = {
        let mut proxy = crate::config::RunConfig::new("train-sae", &super::train_sae::defaults());
        for (key, _) in super::train_sae::defaults() {
            if key != "lambda" && key != "activation" {
                proxy.force_set(key, cfg.get_str(key));
            }
        }
        super::train_sae::sae_config(&proxy)?
    };

    let (parallel, jobs) = parallelism(common);
    let points =
        par::with_threads(jobs, || lambda_sweep(&vectors, &base, &lambdas, &seeds, parallel))?;
    write_csv(&out.join("sweep.csv"), &SWEEP_CSV_HEADER, &sweep_rows(&points))?;
    cfg.write_snapshot(out)?;
    println!(
        "swept {} runs ({} lambdas x 2 activations x {} trials)",
        points.len(),
        lambdas.len(),
        trials
    );
    Ok(ExitCode::SUCCESS)
}
