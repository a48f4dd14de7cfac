use super::Undefined;

/// 1-based ranks with ties assigned the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("non-finite value"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of average ranks.
///
/// Requires n >= 3 and variance in both rankings; anything else is an
/// explicit [`Undefined`], never a silent zero.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, Undefined> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return Err(Undefined::TooFewSamples(n));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let mean = (n + 1) as f64 / 2.0; // mean of 1..=n, also of averaged ties
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        let da = a - mean;
        let db = b - mean;
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 {
        return Err(Undefined::ZeroVariance("x"));
    }
    if syy <= 0.0 {
        return Err(Undefined::ZeroVariance("y"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
