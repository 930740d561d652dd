//! Kolmogorov–Smirnov tests with asymptotic p-values.

use rand::Rng;

use super::report::{Thresholds, VerificationReport};
use crate::error::{GlpError, Result};

const MIN_SAMPLES: usize = 100;

/// Kolmogorov survival function `Q(λ) = 2 Σ_{j≥1} (-1)^{j-1} e^{-2 j² λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, fast for small λ.
        let y = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=5).map(|j| (((2 * j - 1) as f64).powi(2) * y).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value for statistic `d` at effective sample size `n`, with the
/// small-sample correction `λ = (√n + 0.12 + 0.11/√n) d`.
fn p_value(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

fn finite_sorted(op: &'static str, xs: &[f64]) -> Result<Vec<f64>> {
    if xs.len() < MIN_SAMPLES {
        return Err(GlpError::InsufficientData {
            op,
            detail: format!("{} samples, at least {MIN_SAMPLES} required", xs.len()),
        });
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(GlpError::domain(op, "samples contain NaN"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample test of `samples` against a continuous `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(name: &str, samples: &[f64], cdf: F, th: Thresholds) -> Result<VerificationReport> {
    let v = finite_sorted("ks_one_sample", samples)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    Ok(VerificationReport::p_test(
        name,
        "samples follow the reference CDF",
        d,
        p_value(d, n),
        th.alpha,
        v.len(),
    ))
}

/// Two-sample test; ties are handled by comparing the empirical CDFs only
/// at distinct values, which keeps the test conservative for lattice data.
pub fn ks_two_sample(name: &str, a: &[f64], b: &[f64], th: Thresholds) -> Result<VerificationReport> {
    let a = finite_sorted("ks_two_sample", a)?;
    let b = finite_sorted("ks_two_sample", b)?;
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    Ok(VerificationReport::p_test(
        name,
        "both samples share one law",
        d,
        p_value(d, ne),
        th.alpha,
        na + nb,
    ))
}

/// Randomised probability integral transform `F(y-) + V (F(y) - F(y-))`,
/// exactly uniform for any CDF, including lattice ones.
pub fn randomized_pit<R: Rng + ?Sized>(f_below: f64, f_at: f64, rng: &mut R) -> f64 {
    f_below + rng.random::<f64>() * (f_at - f_below)
}
