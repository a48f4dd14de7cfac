use super::resolve;
use crate::Common;
use sbkit_core::checks::{detector_gradcheck, sae_gradcheck};
use sbkit_core::sae::SaeActivation;
use sbkit_core::Result;
use std::process::ExitCode;

fn defaults() -> Vec<(&'static str, String)> {
    vec![
        ("seed", "0".into()),
        ("eps", "1e-4".into()),
        ("tolerance", "1e-4".into()),
    ]
}

pub fn run(common: &Common, inject_error: bool) -> Result<ExitCode> {
    let cfg = resolve(common, "gradcheck", &defaults())?;
    let seed = cfg.get_u64("seed")?;
    let eps = cfg.get_f64("eps")?;
    let tolerance = cfg.get_f64("tolerance")?;

    let checks = [
        ("detector bce", detector_gradcheck(seed, eps, inject_error)),
        ("sae mask loss", sae_gradcheck(seed, eps, SaeActivation::Mask)),
        ("sae relu loss", sae_gradcheck(seed, eps, SaeActivation::Relu)),
    ];
    let mut all_ok = true;
    println!(
        "{:<14} {:<8} {:>12} {:>9} {:>12} {:>12}",
        "model", "tensor", "max_rel_err", "worst", "analytic", "numeric"
    );
    for (name, report) in &checks {
        for tensor in &report.per_tensor {
            let ok = tensor.max_rel_err < tolerance;
            all_ok &= ok;
            println!(
                "{:<14} {:<8} {:>12.3e} {:>4},{:<4} {:>12.4e} {:>12.4e} {}",
                name,
                tensor.name,
                tensor.max_rel_err,
                tensor.worst_index.0,
                tensor.worst_index.1,
                tensor.analytic,
                tensor.numeric,
                if ok { "ok" } else { "FAIL" }
            );
        }
    }
    if all_ok {
        println!("all gradients within {tolerance:.0e}");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("gradient check failed");
        Ok(ExitCode::from(1))
    }
}
