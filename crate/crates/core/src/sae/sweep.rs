use super::train::{train_sae, SaeTrainConfig};
use super::SaeActivation;
use crate::error::Result;
use crate::mix_seed;
use crate::par;
use crate::tensor::Matrix;

/// One trained point of the sparsity/fidelity frontier.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub lambda: f64,
    pub activation: SaeActivation,
    pub seed: u64,
    pub fidelity: f64,
    pub mean_active: f64,
}

pub const SWEEP_CSV_HEADER: [&str; 5] = ["lambda", "activation", "seed", "fidelity", "mean_active"];

/// Train the full grid lambda x {mask, relu} x seeds. Each run derives its
/// own seed, so the grid can be trained in parallel without changing any
/// result; rows come back in grid order.
pub fn lambda_sweep(
    data: &Matrix,
    base: &SaeTrainConfig,
    lambdas: &[f64],
    seeds: &[u64],
    parallel: bool,
) -> Result<Vec<SweepPoint>> {
    let mut grid: Vec<(f64, SaeActivation, u64)> = Vec::new();
    for &lambda in lambdas {
        for activation in [SaeActivation::Mask, SaeActivation::Relu] {
            for &seed in seeds {
                grid.push((lambda, activation, seed));
            }
        }
    }
    let results = par::map_indexed(&grid, parallel, |_, &(lambda, activation, seed)| {
        let cfg = SaeTrainConfig {
            lambda,
            activation,
            seed: mix_seed(base.seed, seed),
            ..base.clone()
        };
        let outcome = train_sae(data, &cfg, false)?;
        Ok::<SweepPoint, crate::CoreError>(SweepPoint {
            lambda,
            activation,
            seed,
            fidelity: outcome.heldout_fidelity,
            mean_active: outcome.mean_active,
        })
    });
    results.into_iter().collect()
}

/// CSV rows in grid order.
pub fn sweep_rows(points: &[SweepPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                format!("{}", p.lambda),
                p.activation.as_str().to_string(),
                format!("{}", p.seed),
                format!("{}", p.fidelity),
                format!("{}", p.mean_active),
            ]
        })
        .collect()
}

/// Seed-averaged (mean_active, fidelity) per lambda for one activation,
/// ordered by ascending lambda.
pub fn frontier(points: &[SweepPoint], activation: SaeActivation) -> Vec<(f64, f64, f64)> {
    let mut lambdas: Vec<f64> = points
        .iter()
        .filter(|p| p.activation == activation)
        .map(|p| p.lambda)
        .collect();
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lambdas.dedup();
    lambdas
        .into_iter()
        .map(|lambda| {
            let runs: Vec<&SweepPoint> = points
                .iter()
                .filter(|p| p.activation == activation && p.lambda == lambda)
                .collect();
            let n = runs.len() as f64;
            let active = runs.iter().map(|p| p.mean_active).sum::<f64>() / n;
            let fid = runs.iter().map(|p| p.fidelity).sum::<f64>() / n;
            (lambda, active, fid)
        })
        .collect()
}

/// Piecewise-linear fidelity at a given mean active count, clamped to the
/// curve's endpoints. `curve` is (mean_active, fidelity) pairs.
pub fn interpolate_fidelity(curve: &[(f64, f64)], active: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = curve.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if pts.is_empty() {
        return f64::NAN;
    }
    if active <= pts[0].0 {
        return pts[0].1;
    }
    if active >= pts[pts.len() - 1].0 {
        return pts[pts.len() - 1].1;
    }
    for w in pts.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if active >= x0 && active <= x1 {
            if x1 - x0 < 1e-12 {
                return y0.min(y1);
            }
            let t = (active - x0) / (x1 - x0);
            return y0 + t * (y1 - y0);
        }
    }
    pts[pts.len() - 1].1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_linear_and_clamped() {
        let curve = [(2.0, 0.1), (6.0, 0.5)];
        assert!((interpolate_fidelity(&curve, 4.0) - 0.3).abs() < 1e-12);
        assert_eq!(interpolate_fidelity(&curve, 0.0), 0.1);
        assert_eq!(interpolate_fidelity(&curve, 10.0), 0.5);
    }
}
