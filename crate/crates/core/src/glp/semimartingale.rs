//! Drift, martingale parts, measure change and the harness property.

use super::{GlpPath, GlpSpec};
use crate::error::{GlpError, Result};
use crate::quad::gauss_kronrod;
use crate::verify::{mean_se, Thresholds, VerificationReport};

/// Minimum number of paths in each conditioning bin of the harness test.
pub const MIN_PER_BIN: usize = 200;

/// Drift rate `(E(R_1 | ξ_t) - R_t) / (1 - t)` at each grid time before 1.
fn drift_rates(spec: &GlpSpec, path: &GlpPath) -> Result<Vec<f64>> {
    spec.require_integrable("martingale residual")?;
    let times = path.times();
    let mut out = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        if t >= 1.0 {
            break;
        }
        let r = path.r()[k];
        out.push((spec.theta().posterior_mean(t, r)? - r) / (1.0 - t));
    }
    Ok(out)
}

/// `M_t = R_t - ∫_0^t (E(R_1 | F_s) - R_s) / (1 - s) ds`, left-point rule
/// on the path grid. On the grid this is an exact martingale.
pub fn martingale_residual(spec: &GlpSpec, path: &GlpPath) -> Result<Vec<f64>> {
    let drift = drift_rates(spec, path)?;
    let times = path.times();
    let r = path.r();
    let mut out = Vec::with_capacity(times.len());
    let mut comp = 0.0;
    out.push(r[0]);
    for k in 1..times.len() {
        comp += drift[k - 1] * (times[k] - times[k - 1]);
        out.push(r[k] - comp);
    }
    Ok(out)
}

/// Per-coordinate residuals, `[k][i]`: coordinate `i` carries the share
/// `m_i / Σm` of the sum drift.
pub fn martingale_residual_coords(spec: &GlpSpec, path: &GlpPath) -> Result<Vec<Vec<f64>>> {
    let drift = drift_rates(spec, path)?;
    let shares = spec.activity().shares();
    let times = path.times();
    let mut comp = vec![0.0; spec.n()];
    let mut out = Vec::with_capacity(times.len());
    out.push(path.at(0).to_vec());
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        for (c, p) in comp.iter_mut().zip(&shares) {
            *c += p * drift[k - 1] * dt;
        }
        out.push(path.at(k).iter().zip(&comp).map(|(x, c)| x - c).collect());
    }
    Ok(out)
}

/// Density of the free Lévy law against the GLP law on `F_t`:
/// `Θ_t(R_t)^{-1}`, with `t` a time of the path grid.
pub fn rn_density(spec: &GlpSpec, path: &GlpPath, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(GlpError::Horizon {
            op: "Radon-Nikodym density",
            t,
            range: "[0, 1)",
        });
    }
    let k = path
        .grid()
        .index_of(t)
        .ok_or_else(|| GlpError::InvalidGrid(format!("time {t} is not on the path grid")))?;
    Ok((-spec.theta().log_big_theta(t, path.r()[k])?).exp())
}

/// `Z_t = (E(R_1 | ξ_t) - R_t)/(1 - t) ∫_t^1 φ + ∫_0^t φ dR`.
///
/// The Stieltjes integral uses the cell average of `φ` as the weight of each
/// grid increment, which keeps `Z` an exact martingale on the grid.
pub fn z_martingale<F: Fn(f64) -> f64>(spec: &GlpSpec, path: &GlpPath, phi: F) -> Result<Vec<f64>> {
    let drift = drift_rates(spec, path)?;
    let times = path.times();
    let r = path.r();
    let int = |a: f64, b: f64| -> Result<f64> { Ok(gauss_kronrod(&phi, a, b, 1e-12)?.value) };
    let mut out = Vec::with_capacity(times.len());
    let mut stieltjes = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            stieltjes += int(times[k - 1], times[k])? * (r[k] - r[k - 1]) / (times[k] - times[k - 1]);
        }
        let tail = if times[k] < 1.0 { drift[k] * int(times[k], 1.0)? } else { 0.0 };
        out.push(stieltjes + tail);
    }
    Ok(out)
}

/// `Y = (R_c - R_b)/(c - b) - (R_d - R_a)/(d - a)` for each path.
pub fn harness_statistic_values(paths: &[GlpPath], times: [f64; 4]) -> Result<Vec<f64>> {
    let [a, b, c, d] = times;
    if !(0.0 <= a && a < b && b < c && c < d && d <= 1.0) {
        return Err(GlpError::InvalidGrid(format!("harness times must satisfy 0 <= a < b < c < d <= 1, got {times:?}")));
    }
    paths
        .iter()
        .map(|p| {
            let at = |t: f64| {
                p.grid()
                    .index_of(t)
                    .map(|k| p.r()[k])
                    .ok_or_else(|| GlpError::InvalidGrid(format!("time {t} is not on the path grid")))
            };
            Ok((at(c)? - at(b)?) / (c - b) - (at(d)? - at(a)?) / (d - a))
        })
        .collect()
}

/// Tests `E[(R_c - R_b)/(c - b) | R_a, R_d] = (R_d - R_a)/(d - a)` on four
/// equal-count bins of `(R_a, R_d)`. The report carries the bin with the
/// largest `|z|`; it passes only if every bin is within `k` standard errors.
pub fn harness_statistic(
    spec: &GlpSpec,
    paths: &[GlpPath],
    times: [f64; 4],
    th: Thresholds,
) -> Result<VerificationReport> {
    spec.require_integrable("harness statistic")?;
    if paths.len() < 4 * MIN_PER_BIN {
        return Err(GlpError::InsufficientData {
            op: "harness statistic",
            detail: format!("{} paths, need {} ({} per bin)", paths.len(), 4 * MIN_PER_BIN, MIN_PER_BIN),
        });
    }
    let y = harness_statistic_values(paths, times)?;
    let at = |p: &GlpPath, t: f64| p.r()[p.grid().index_of(t).unwrap_or(0)];
    let ra: Vec<f64> = paths.iter().map(|p| at(p, times[0])).collect();
    let rd: Vec<f64> = paths.iter().map(|p| at(p, times[3])).collect();
    let mut worst: Option<(f64, f64, f64)> = None;
    for half in equal_count_split((0..paths.len()).collect(), &ra) {
        for bin in equal_count_split(half, &rd) {
            let ys: Vec<f64> = bin.iter().map(|&j| y[j]).collect();
            let (m, se) = mean_se(&ys);
            let z = if se > 0.0 {
                m.abs() / se
            } else if m == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            if worst.is_none_or(|w| z > w.0) {
                worst = Some((z, m, se));
            }
        }
    }
    let (_, m, se) = worst.expect("four bins");
    Ok(VerificationReport::z_test(
        "harness",
        "E[Y | R_a, R_d] = 0 in every bin",
        0.0,
        m,
        se,
        th.k,
        paths.len(),
    ))
}

/// Splits `idx` into two halves by `key`, ties broken by index.
fn equal_count_split(mut idx: Vec<usize>, key: &[f64]) -> [Vec<usize>; 2] {
    idx.sort_by(|&i, &j| key[i].total_cmp(&key[j]).then(i.cmp(&j)));
    let upper = idx.split_off(idx.len() / 2);
    [idx, upper]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glp::{sample_glp_master, PathGrid};
    use crate::kernels::DensityFamily;
    use crate::measures::GeneratingLaw;
    use crate::rng::stream;

    const BM: DensityFamily = DensityFamily::Brownian { sigma: 1.0 };

    fn fixed_path(spec: &GlpSpec) -> GlpPath {
        let grid = PathGrid::new(vec![0.0, 0.25, 0.5, 0.75]).unwrap();
        let rows = vec![vec![0.0; spec.n()], vec![0.3; spec.n()], vec![-0.2; spec.n()], vec![0.6; spec.n()]];
        GlpPath::new(grid, rows).unwrap()
    }

    #[test]
    fn residual_starts_at_zero_and_subtracts_drift() {
        let spec = GlpSpec::new(BM, GeneratingLaw::dirac(1.0), vec![1.0]).unwrap();
        let p = fixed_path(&spec);
        let m = martingale_residual(&spec, &p).unwrap();
        assert_eq!(m[0], 0.0);
        // Pinned at 1: drift (1 - R_t)/(1 - t).
        let want = 0.3 - 0.25 * 1.0;
        assert!((m[1] - want).abs() < 1e-12);
        let want2 = -0.2 - 0.25 - 0.25 * (1.0 - 0.3) / 0.75;
        assert!((m[2] - want2).abs() < 1e-12);
    }

    #[test]
    fn coordinate_residuals_sum_to_the_total() {
        let law = GeneratingLaw::from_pairs(&[(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        let spec = GlpSpec::new(BM, law, vec![1.0, 3.0]).unwrap();
        let p = fixed_path(&spec);
        let m = martingale_residual(&spec, &p).unwrap();
        let mc = martingale_residual_coords(&spec, &p).unwrap();
        for (a, b) in m.iter().zip(&mc) {
            assert!((a - b.iter().sum::<f64>()).abs() < 1e-12);
        }
    }

    #[test]
    fn rn_density_examples() {
        let spec = GlpSpec::new(BM, GeneratingLaw::dirac(1.0), vec![1.0]).unwrap();
        let p = fixed_path(&spec);
        assert!((rn_density(&spec, &p, 0.0).unwrap() - 1.0).abs() < 1e-14);
        // Θ_t(r) = f_{1-t}(1 - r) / f_1(1) for a point mass at 1.
        let f = |h: f64, x: f64| BM.density(h, x).unwrap();
        let want = f(1.0, 1.0) / f(0.5, 1.0 + 0.2);
        assert!((rn_density(&spec, &p, 0.5).unwrap() - want).abs() < 1e-12 * want);
        assert!(rn_density(&spec, &p, 0.4).is_err());
    }

    #[test]
    fn z_with_unit_phi_is_the_conditional_mean() {
        let law = GeneratingLaw::from_pairs(&[(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        let spec = GlpSpec::new(BM, law, vec![1.0, 1.0]).unwrap();
        let p = fixed_path(&spec);
        let z = z_martingale(&spec, &p, |_| 1.0).unwrap();
        for (k, &t) in p.times().iter().enumerate() {
            let e1 = spec.theta().posterior_mean(t, p.r()[k]).unwrap();
            assert!((z[k] - e1).abs() < 1e-10, "{k}: {} vs {e1}", z[k]);
        }
    }

    #[test]
    fn z_zero_for_linear_phi_dirac() {
        let spec = GlpSpec::new(BM, GeneratingLaw::dirac(1.4), vec![1.0]).unwrap();
        let z = z_martingale(&spec, &fixed_path(&spec), |u| u).unwrap();
        assert!((z[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn harness_needs_data_and_passes_on_bridges() {
        let spec = GlpSpec::new(BM, GeneratingLaw::dirac(0.0), vec![1.0]).unwrap();
        let grid = PathGrid::new(vec![0.0, 0.2, 0.4, 0.7, 0.9]).unwrap();
        let mut rng = stream(9, 9, 9);
        let paths: Vec<GlpPath> = (0..2000).map(|_| sample_glp_master(&spec, &grid, &mut rng).unwrap()).collect();
        let times = [0.2, 0.4, 0.7, 0.9];
        assert!(matches!(
            harness_statistic(&spec, &paths[..100], times, Thresholds::default()),
            Err(GlpError::InsufficientData { .. })
        ));
        let rep = harness_statistic(&spec, &paths, times, Thresholds::default()).unwrap();
        assert!(rep.pass, "{rep}");
    }
}
