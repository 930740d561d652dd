//! Martingale check for a scalar process observed on a grid.

use statrs::distribution::{ContinuousCDF, Normal};

use super::regression::ols;
use super::report::{mean_se, Thresholds, VerificationReport};
use crate::error::{GlpError, Result};

pub const MIN_PATHS: usize = 10_000;

/// Tests `E[X_{k+1} - X_k | X_k] = 0` on every grid step and `E[X_K - X_0] = 0`.
///
/// Each step regresses the increment on `(1, X_k - mean X_k)`; the
/// intercept is the mean drift of the step and the slope its dependence on
/// the current value. Every coefficient is turned into a z-score with an
/// HC0 standard error, and the largest `|z|` is compared with a threshold
/// that keeps the family-wise false-rejection rate equal to that of a single
/// `k`-SE test.
pub fn martingale_test(name: &str, paths: &[Vec<f64>], grid: &[f64], th: Thresholds) -> Result<VerificationReport> {
    if paths.len() < MIN_PATHS {
        return Err(GlpError::InsufficientData {
            op: "martingale_test",
            detail: format!("{} paths, at least {MIN_PATHS} required", paths.len()),
        });
    }
    if grid.len() < 2 || paths.iter().any(|p| p.len() != grid.len()) {
        return Err(GlpError::InvalidGrid("paths must be observed on the full grid of at least two times".into()));
    }
    let mut zs = Vec::new();
    for k in 0..grid.len() - 1 {
        let x: Vec<f64> = paths.iter().map(|p| p[k]).collect();
        let dx: Vec<f64> = paths.iter().map(|p| p[k + 1] - p[k]).collect();
        let (xm, _) = mean_se(&x);
        let spread = x.iter().map(|v| (v - xm).abs()).fold(0.0, f64::max);
        if spread > 1e-12 * xm.abs().max(1.0) {
            let design: Vec<Vec<f64>> = x.iter().map(|v| vec![1.0, v - xm]).collect();
            let fit = ols(&design, &dx, None)?;
            zs.push(step_z(fit.coef[0], fit.se[0]));
            zs.push(step_z(fit.coef[1], fit.se[1]));
        } else {
            let (m, se) = mean_se(&dx);
            zs.push(step_z(m, se));
        }
    }
    let total: Vec<f64> = paths.iter().map(|p| p[p.len() - 1] - p[0]).collect();
    let (m, se) = mean_se(&total);
    zs.push(step_z(m, se));
    let worst = zs.iter().copied().fold(0.0, |a: f64, z| if z.is_nan() { f64::INFINITY } else { a.max(z.abs()) });
    let k_eff = familywise_k(th.k, zs.len());
    Ok(VerificationReport::z_test(
        name,
        "largest |z| over step drifts, step slopes and total drift",
        0.0,
        worst,
        1.0,
        k_eff,
        paths.len(),
    ))
}

fn step_z(est: f64, se: f64) -> f64 {
    if se > 0.0 {
        est / se
    } else if est.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Threshold for the maximum of `m` z-scores with the same two-sided
/// false-rejection rate as one `k`-SE test (Bonferroni).
pub fn familywise_k(k: f64, m: usize) -> f64 {
    let n = Normal::standard();
    let alpha = 2.0 * (1.0 - n.cdf(k));
    n.inverse_cdf(1.0 - alpha / (2.0 * m.max(1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, Poisson};

    fn poisson_paths(compensate: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
        let grid: Vec<f64> = (0..=5).map(|k| k as f64 * 0.2).collect();
        let mut rng = stream(5, 5, 0);
        let step = Poisson::new(0.2 * 3.0).unwrap();
        let paths = (0..MIN_PATHS)
            .map(|_| {
                let mut n = 0.0;
                grid.iter()
                    .enumerate()
                    .map(|(k, &t)| {
                        if k > 0 {
                            n += step.sample(&mut rng);
                        }
                        if compensate {
                            n - 3.0 * t
                        } else {
                            n
                        }
                    })
                    .collect()
            })
            .collect();
        (paths, grid)
    }

    #[test]
    fn compensated_poisson_passes_raw_fails() {
        let (p, g) = poisson_paths(true);
        assert!(martingale_test("comp", &p, &g, Thresholds::default()).unwrap().pass);
        let (p, g) = poisson_paths(false);
        assert!(!martingale_test("raw", &p, &g, Thresholds::default()).unwrap().pass);
    }

    #[test]
    fn familywise_reduces_to_k() {
        assert!((familywise_k(3.0, 1) - 3.0).abs() < 1e-9);
        assert!(familywise_k(3.0, 20) > 3.0);
    }
}
