use crate::error::{CoreError, Result};

/// Two-sided p-value with a flag for the |rho| = 1 limit, where the
/// t-approximation degenerates and zero is reported exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValue {
    pub p: f64,
    pub exact_limit: bool,
}

/// Two-sided significance of a Spearman correlation via the
/// t-approximation `t = rho sqrt((n-2) / (1 - rho^2))` with n-2 degrees of
/// freedom.
pub fn spearman_pvalue(rho: f64, n: usize) -> Result<PValue> {
    if n < 4 {
        return Err(CoreError::Input(format!(
            "p-value needs n >= 4, got {n}"
        )));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(CoreError::Input(format!("rho {rho} outside [-1, 1]")));
    }
    if rho.abs() >= 1.0 {
        return Ok(PValue {
            p: 0.0,
            exact_limit: true,
        });
    }
    let dof = (n - 2) as f64;
    let t = rho * (dof / (1.0 - rho * rho)).sqrt();
    Ok(PValue {
        p: student_t_two_sided(t, dof),
        exact_limit: false,
    })
}

/// Bonferroni adjustment: `min(1, m * p)`.
pub fn bonferroni(p_raw: f64, m: usize) -> f64 {
    (p_raw * m as f64).min(1.0)
}

/// Two-sided tail probability of Student's t: `P(|T| >= |t|)`, computed as
/// the regularized incomplete beta `I_x(dof/2, 1/2)` at
/// `x = dof / (dof + t^2)`.
pub fn student_t_two_sided(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    incomplete_beta(dof / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Regularized incomplete beta function I_x(a, b) by continued fraction.
fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Lentz continued-fraction evaluation for the incomplete beta.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive-Simpson quadrature of the t density, the independent oracle
    /// for the closed-form tail.
    fn t_pdf(x: f64, dof: f64) -> f64 {
        let ln_norm = libm::lgamma((dof + 1.0) / 2.0)
            - libm::lgamma(dof / 2.0)
            - 0.5 * (dof * std::f64::consts::PI).ln();
        (ln_norm - (dof + 1.0) / 2.0 * (1.0 + x * x / dof).ln()).exp()
    }

    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            acc += f(x) * if i % 2 == 0 { 2.0 } else { 4.0 };
        }
        acc * h / 3.0
    }

    fn two_sided_by_quadrature(t: f64, dof: f64) -> f64 {
        // integrate the density from |t| far into the tail
        let f = |x: f64| t_pdf(x, dof);
        2.0 * simpson(&f, t.abs(), t.abs() + 200.0, 200_000)
    }

    #[test]
    fn matches_quadrature_oracle() {
        for &(rho, n) in &[(0.8f64, 30usize), (0.4, 12), (0.95, 8), (0.1, 60)] {
            let dof = (n - 2) as f64;
            let t = rho * (dof / (1.0 - rho * rho)).sqrt();
            let closed = spearman_pvalue(rho, n).unwrap().p;
            let oracle = two_sided_by_quadrature(t, dof);
            assert!(
                (closed - oracle).abs() < 1e-6,
                "rho={rho}, n={n}: {closed} vs {oracle}"
            );
        }
    }

    #[test]
    fn zero_rho_is_certain() {
        let p = spearman_pvalue(0.0, 30).unwrap();
        assert!((p.p - 1.0).abs() < 1e-12);
        assert!(!p.exact_limit);
    }

    #[test]
    fn perfect_rho_hits_the_exact_limit() {
        let p = spearman_pvalue(1.0, 10).unwrap();
        assert_eq!(p.p, 0.0);
        assert!(p.exact_limit);
    }

    #[test]
    fn symmetry_in_rho_sign() {
        let a = spearman_pvalue(0.6, 20).unwrap().p;
        let b = spearman_pvalue(-0.6, 20).unwrap().p;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn bonferroni_cases() {
        // the grid-sized adjustment keeps an extreme p extreme
        let adjusted = bonferroni(1e-25, 2112);
        assert!((adjusted - 2.112e-22).abs() < 1e-34);
        assert!(adjusted < 1e-20);
        assert_eq!(bonferroni(0.01, 1), 0.01);
        assert_eq!(bonferroni(0.01, 200), 1.0);
    }

    #[test]
    fn bonferroni_is_monotone() {
        assert!(bonferroni(0.001, 10) <= bonferroni(0.002, 10));
        assert!(bonferroni(0.001, 10) <= bonferroni(0.001, 20));
    }
}
