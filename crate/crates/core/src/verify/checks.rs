//! Monte Carlo and quadrature checks of the process laws. Each check owns
//! its random streams, keyed by the master seed and the check's label, so
//! results do not depend on thread scheduling.

use rand::Rng;
use rayon::prelude::*;

use super::ks::{ks_one_sample, ks_two_sample, randomized_pit};
use super::martingale::martingale_test;
use super::report::{mean_se, Thresholds, VerificationReport};
use crate::blp::{blp_posterior, sample_blp_anticipative, sample_z, sigma_weights, z_covariance};
use crate::error::{GlpError, Result};
use crate::glp::{
    consistency_experiment, harness_statistic, martingale_residual, sample_glp_markov, sample_glp_master, transition_mass, z_martingale,
    ConsistencyDesign, GlpPath, GlpSpec, MassQuery, PathGrid, Sampler,
};
use crate::kernels::{bridge_increment_cdf, bridge_total_mass, sample_bridge_path, BridgeEndpoint, DensityFamily, StateRange};
use crate::lrb::LrbSpec;
use crate::plp::{
    counts_at, first_jump_times, intensity_coordinates, intensity_r, plp_terminal_pmf, psi, psi_inverse,
    sample_plp_jumps, survival_functions, PlpSpec,
};
use crate::quad::Rule;
use crate::rng::{stream, tag, StreamRng};

/// Runs `f` for `count` items in parallel, item `j` on stream
/// `(seed, tag(label), j)`; output order follows `j`.
pub fn par_draws<T, F>(count: usize, seed: u64, label: &str, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut StreamRng) -> Result<T> + Sync,
{
    let tg = tag(label);
    (0..count as u64)
        .into_par_iter()
        .map(|j| f(&mut stream(seed, tg, j)))
        .collect()
}

/// Samples `count` paths with the chosen construction.
pub fn sample_paths(
    spec: &GlpSpec,
    grid: &PathGrid,
    sampler: Sampler,
    count: usize,
    seed: u64,
    label: &str,
) -> Result<Vec<GlpPath>> {
    par_draws(count, seed, label, |rng| match sampler {
        Sampler::Master => sample_glp_master(spec, grid, rng),
        Sampler::Markov => sample_glp_markov(spec, grid, rng),
        Sampler::Anticipative => sample_blp_anticipative(spec, grid, rng),
    })
}

fn grid_with(times: &[f64]) -> Result<PathGrid> {
    let mut v = vec![0.0];
    v.extend(times.iter().copied().filter(|t| *t > 0.0));
    PathGrid::new(v)
}

fn fmt_t(t: f64) -> String {
    format!("{t}")
}

/// Two-sample KS per coordinate and time between the master construction
/// and `other`.
pub fn sampler_equivalence(
    spec: &GlpSpec,
    times: &[f64],
    other: Sampler,
    paths: usize,
    seed: u64,
    th: Thresholds,
) -> Result<Vec<VerificationReport>> {
    let grid = grid_with(times)?;
    let a = sample_paths(spec, &grid, Sampler::Master, paths, seed, "equivalence-master")?;
    let b = sample_paths(spec, &grid, other, paths, seed, "equivalence-other")?;
    let label = match other {
        Sampler::Master => "master",
        Sampler::Markov => "markov",
        Sampler::Anticipative => "anticipative",
    };
    let mut out = Vec::new();
    for (k, &t) in grid.times().iter().enumerate().skip(1) {
        for i in 0..spec.n() {
            let xa: Vec<f64> = a.iter().map(|p| p.at(k)[i]).collect();
            let xb: Vec<f64> = b.iter().map(|p| p.at(k)[i]).collect();
            let name = format!("master-vs-{label} coord {} t={}", i + 1, fmt_t(t));
            out.push(ks_two_sample(&name, &xa, &xb, th)?.with_seed(seed));
        }
    }
    Ok(out)
}

/// Entrywise z-tests of the sample covariance of `Z` against
/// `δ_ij m_i - m_i m_j / Σm`, plus the exact identity `ΣZ = 0`.
pub fn z_covariance_check(m: &[f64], draws: usize, seed: u64, th: Thresholds) -> Result<Vec<VerificationReport>> {
    let zs = par_draws(draws, seed, "z-covariance", |rng| Ok(sample_z(m, rng)))?;
    let cov = z_covariance(m);
    let mut out = Vec::new();
    for i in 0..m.len() {
        for j in i..m.len() {
            let prod: Vec<f64> = zs.iter().map(|z| z[i] * z[j]).collect();
            let (est, se) = mean_se(&prod);
            out.push(
                VerificationReport::z_test(
                    &format!("Z covariance ({},{})", i + 1, j + 1),
                    "sample covariance equals δ_ij m_i - m_i m_j / Σm",
                    cov[i][j],
                    est,
                    se,
                    th.k,
                    draws,
                )
                .with_seed(seed),
            );
        }
    }
    let worst = zs.iter().map(|z| z.iter().sum::<f64>().abs()).fold(0.0, f64::max);
    out.push(VerificationReport::identity("Z sums to zero", "max |ΣZ| per draw", 0.0, worst, 1e-12).with_seed(seed));
    Ok(out)
}

/// `∫ Θ_t(x + y) f_{(t-s)Σm}(y) dy = Θ_s(x)`: `Θ` is space-time harmonic
/// for the free process.
pub fn theta_harmonicity(spec: &GlpSpec, s: f64, x: f64, t: f64, tol: f64) -> Result<VerificationReport> {
    let fam = spec.family();
    let span = (t - s) * spec.total_activity();
    let th = spec.theta();
    let range = th.increment_range(s, x, t).merge(fam.free_range(span, 0.0));
    let lhs = range.integrate(|p| {
        let y = p.offset_from(0.0);
        (th.log_big_theta(t, x + p.x).unwrap_or(f64::NEG_INFINITY) + fam.log_density(span, y)).exp()
    })?;
    Ok(VerificationReport::identity(
        "Theta harmonicity",
        "E_free[Θ_t(x + X_t - X_s)] = Θ_s(x)",
        th.big_theta(s, x)?,
        lhs,
        tol,
    ))
}

/// Martingale tests on a uniform grid ending at `end < 1`: the residual
/// `M`, the process `Z` with `φ(u) = u`, the filter weights of each atom
/// (Brownian specs with atomic law), and `Θ_t(X_t)` under the free law.
pub fn martingale_checks(
    spec: &GlpSpec,
    steps: usize,
    end: f64,
    paths: usize,
    seed: u64,
    th: Thresholds,
) -> Result<Vec<VerificationReport>> {
    let grid = PathGrid::uniform(steps, end)?;
    let mut out = Vec::new();
    if spec.family().is_integrable() {
        out.extend(residual_martingales(spec, &grid, paths, seed, th)?);
    }
    if matches!(spec.family(), DensityFamily::Brownian { .. }) && spec.law().continuous().is_none() {
        out.extend(filter_martingales(spec, &grid, paths, seed, th)?);
    }
    out.push(free_theta_martingale(spec, grid.times(), paths, seed, th)?);
    Ok(out)
}

/// `M` and `Z` (with `φ(u) = u`) along master paths.
pub fn residual_martingales(
    spec: &GlpSpec,
    grid: &PathGrid,
    paths: usize,
    seed: u64,
    th: Thresholds,
) -> Result<Vec<VerificationReport>> {
    let glp = sample_paths(spec, grid, Sampler::Master, paths, seed, "martingale-paths")?;
    let times = grid.times();
    let m: Vec<Vec<f64>> = glp
        .par_iter()
        .map(|p| martingale_residual(spec, p))
        .collect::<Result<_>>()?;
    let z: Vec<Vec<f64>> = glp
        .par_iter()
        .map(|p| z_martingale(spec, p, |u| u))
        .collect::<Result<_>>()?;
    Ok(vec![
        martingale_test("martingale residual M", &m, times, th)?.with_seed(seed),
        martingale_test("Z martingale, phi(u)=u", &z, times, th)?.with_seed(seed),
    ])
}

/// Filter weight of every atom along master paths.
pub fn filter_martingales(
    spec: &GlpSpec,
    grid: &PathGrid,
    paths: usize,
    seed: u64,
    th: Thresholds,
) -> Result<Vec<VerificationReport>> {
    let glp = sample_paths(spec, grid, Sampler::Master, paths, seed, "martingale-paths")?;
    let times = grid.times();
    let states: Vec<Vec<Vec<f64>>> = glp
        .par_iter()
        .map(|p| {
            (0..times.len())
                .map(|k| Ok(blp_posterior(spec, times[k], p.at(k))?.weights))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    spec.law()
        .atoms()
        .iter()
        .enumerate()
        .map(|(a, atom)| {
            let w: Vec<Vec<f64>> = states.iter().map(|s| s.iter().map(|v| v[a]).collect()).collect();
            let name = format!("filter weight of atom {}", atom.location);
            Ok(martingale_test(&name, &w, times, th)?.with_seed(seed))
        })
        .collect()
}

/// `Θ_t(X_t)` for the free Lévy process `X` on the master horizon.
pub fn free_theta_martingale(
    spec: &GlpSpec,
    times: &[f64],
    paths: usize,
    seed: u64,
    th: Thresholds,
) -> Result<VerificationReport> {
    let fam = *spec.family();
    let total = spec.total_activity();
    let vals = par_draws(paths, seed, "free-theta", |rng| {
        let mut x = 0.0;
        let mut prev = 0.0;
        times
            .iter()
            .map(|&t| {
                if t > prev {
                    x += fam.sample_increment((t - prev) * total, rng);
                }
                prev = t;
                spec.theta().big_theta(t, x)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(martingale_test("Theta_t(X_t) under the free law", &vals, times, th)?.with_seed(seed))
}

/// Harness statistic on master paths observed at `(a, b, c, d)`.
pub fn harness_check(
    spec: &GlpSpec,
    times: [f64; 4],
    paths: usize,
    seed: u64,
    th: Thresholds,
) -> Result<VerificationReport> {
    let grid = grid_with(&times)?;
    let glp = sample_paths(spec, &grid, Sampler::Master, paths, seed, "harness")?;
    Ok(harness_statistic(spec, &glp, times, th)?.with_seed(seed))
}

/// Weak consistency of coordinate 1, strong failure and its control.
pub fn consistency_reports(spec: &GlpSpec, s: f64, t: f64, paths: usize, seed: u64, th: Thresholds) -> Result<Vec<VerificationReport>> {
    consistency_experiment(spec, &ConsistencyDesign::new(s, t, paths, seed), th)
}

/// Free-law probability that `X_t ∈ [lo, hi]` for coordinate activity `h`.
fn free_interval_probability(fam: &DensityFamily, h: f64, lo: f64, hi: f64) -> Result<f64> {
    if fam.is_lattice() {
        let (a, b) = (lo.ceil().max(0.0), hi.floor());
        if b < a {
            return Ok(0.0);
        }
        return StateRange::Lattice {
            lo: a as i64,
            hi: b as i64,
        }
        .integrate(|p| fam.log_density(h, p.x).exp());
    }
    let lo = if fam.is_subordinator() { lo.max(0.0) } else { lo };
    if hi <= lo {
        return Ok(0.0);
    }
    let rule = if fam.is_subordinator() { Rule::EndpointSingular } else { Rule::Smooth };
    let mut l = fam.free_range(h, 0.0);
    if let StateRange::Line(ref mut lay) = l {
        lay.breaks.extend([lo, hi]);
        lay.rule = rule;
        *lay = lay.clone().normalise().clip(lo, hi);
    }
    l.integrate(|p| fam.log_density(h, p.offset_from(0.0)).exp())
}

/// `E_GLP[Θ_t(R_t)^{-1} 1{ξ_t ∈ box}]` against the free probability of the
/// box, for `boxes` random boxes.
pub fn measure_change_check(
    spec: &GlpSpec,
    t: f64,
    boxes: usize,
    paths: usize,
    seed: u64,
    th: Thresholds,
) -> Result<Vec<VerificationReport>> {
    let grid = grid_with(&[t])?;
    let glp = sample_paths(spec, &grid, Sampler::Master, paths, seed, "measure-change")?;
    let w: Vec<f64> = glp
        .par_iter()
        .map(|p| Ok((-spec.theta().log_big_theta(t, p.r()[1])?).exp()))
        .collect::<Result<_>>()?;
    let fam = *spec.family();
    let m = spec.activity().m();
    let mut rng = stream(seed, tag("measure-change-boxes"), 0);
    let mut out = Vec::new();
    for b in 0..boxes {
        let bx: Vec<(f64, f64)> = m
            .iter()
            .map(|mi| {
                let h = t * mi;
                let c = fam.sample_increment(h, &mut rng);
                let half = fam.scale(h) * rng.random_range(0.5..1.5);
                (c - half, c + half)
            })
            .collect();
        let free: f64 = bx
            .iter()
            .zip(m)
            .map(|((lo, hi), mi)| free_interval_probability(&fam, t * mi, *lo, *hi))
            .product::<Result<f64>>()?;
        let v: Vec<f64> = glp
            .iter()
            .zip(&w)
            .map(|(p, wi)| {
                let inside = p.at(1).iter().zip(&bx).all(|(x, (lo, hi))| lo <= x && x <= hi);
                if inside {
                    *wi
                } else {
                    0.0
                }
            })
            .collect();
        let (est, se) = mean_se(&v);
        out.push(
            VerificationReport::z_test(
                &format!("measure change box {}", b + 1),
                "reweighted GLP probability equals the free probability",
                free,
                est,
                se,
                th.k,
                paths,
            )
            .with_seed(seed),
        );
    }
    Ok(out)
}

/// `Var(R_t - t R_1) = σ² Σm t (1 - t)` under the anticipative sampler.
pub fn bridge_variance_check(spec: &GlpSpec, t: f64, paths: usize, seed: u64, th: Thresholds) -> Result<VerificationReport> {
    let DensityFamily::Brownian { sigma } = *spec.family() else {
        return Err(GlpError::unsupported("bridge variance check", "the family must be Brownian"));
    };
    let grid = PathGrid::new(vec![0.0, t, 1.0])?;
    let glp = sample_paths(spec, &grid, Sampler::Anticipative, paths, seed, "bridge-variance")?;
    let sq: Vec<f64> = glp.iter().map(|p| (p.r()[1] - t * p.r()[2]).powi(2)).collect();
    let (est, se) = mean_se(&sq);
    Ok(VerificationReport::z_test(
        "variance of R_t - t R_1",
        "equals σ² Σm t (1 - t)",
        sigma * sigma * spec.total_activity() * t * (1.0 - t),
        est,
        se,
        th.k,
        paths,
    )
    .with_seed(seed))
}

/// Deterministic filter identities at sampled states: the weights agree
/// with the sum-process law and the volatility weights average to zero.
pub fn filter_identities(spec: &GlpSpec, states: usize, seed: u64) -> Result<Vec<VerificationReport>> {
    let grid = PathGrid::new(vec![0.0, 0.3, 0.6, 0.9])?;
    let glp = sample_paths(spec, &grid, Sampler::Master, states, seed, "filter-identities")?;
    let mut law_gap: f64 = 0.0;
    let mut centre_gap: f64 = 0.0;
    for p in &glp {
        for (k, &t) in grid.times().iter().enumerate() {
            let st = blp_posterior(spec, t, p.at(k))?;
            let law = spec.theta().posterior(t, p.r()[k])?;
            for (a, w) in st.atoms.iter().zip(&st.weights) {
                law_gap = law_gap.max((w - law.atom_mass(*a)).abs());
            }
            let mut centre = vec![0.0; spec.n()];
            for j in 0..st.atoms.len() {
                for (c, v) in centre.iter_mut().zip(sigma_weights(&st, spec, j)?) {
                    *c += st.weights[j] * v;
                }
            }
            centre_gap = centre_gap.max(centre.iter().fold(0.0, |a, c| a.max(c.abs())));
        }
    }
    Ok(vec![
        VerificationReport::identity("filter weights vs sum-process law", "max abs difference", 0.0, law_gap, 1e-10)
            .with_seed(seed),
        VerificationReport::identity("volatility weights average to zero", "max abs weighted mean", 0.0, centre_gap, 1e-9)
            .with_seed(seed),
    ])
}

/// Poisson Liouville checks: the intensity sum identity, jump rates against
/// intensities, marginal and joint survival, the `ψ` round trip, the
/// conditioned uniformity of `ψ(p_i T^{(i)})`, and the pmf normalisation.
pub fn plp_checks(spec: &PlpSpec, paths: usize, seed: u64, th: Thresholds) -> Result<Vec<VerificationReport>> {
    let n = spec.n();
    let p = spec.shares();
    let mut out = Vec::new();
    let jumps = par_draws(paths, seed, "plp-jumps", |rng| sample_plp_jumps(spec, rng))?;

    // Intensity sum identity at observed states.
    let (t, h) = (0.3, 0.1);
    let mut gap: f64 = 0.0;
    for j in jumps.iter().take(1000) {
        let x = counts_at(j, t);
        let lr = intensity_r(spec, t, &x)?;
        let li = intensity_coordinates(spec, t, &x)?;
        gap = gap.max((li.iter().sum::<f64>() - lr).abs() / lr.max(1.0));
    }
    out.push(VerificationReport::identity("intensity sum", "Σ_i λ^(i) = λ^R", 0.0, gap, 1e-12).with_seed(seed));

    // E[N(t, t+h] | F_t] = h λ_t holds exactly because the drift is linear.
    let mut resid_r = Vec::with_capacity(paths);
    let mut resid_i = vec![Vec::with_capacity(paths); n];
    for j in &jumps {
        let x = counts_at(j, t);
        let y = counts_at(j, t + h);
        let li = intensity_coordinates(spec, t, &x)?;
        resid_r.push((y.iter().sum::<f64>() - x.iter().sum::<f64>()) / h - li.iter().sum::<f64>());
        for i in 0..n {
            resid_i[i].push((y[i] - x[i]) / h - li[i]);
        }
    }
    let (est, se) = mean_se(&resid_r);
    out.push(
        VerificationReport::z_test("jump rate of R vs intensity", "mean of N/h - λ^R is 0", 0.0, est, se, th.k, paths)
            .with_seed(seed),
    );
    for (i, r) in resid_i.iter().enumerate() {
        let (est, se) = mean_se(r);
        out.push(
            VerificationReport::z_test(
                &format!("jump rate of coord {} vs intensity", i + 1),
                "mean of N/h - λ^(i) is 0",
                0.0,
                est,
                se,
                th.k,
                paths,
            )
            .with_seed(seed),
        );
    }

    // Survival of first-jump times.
    let firsts: Vec<Vec<Option<f64>>> = jumps.iter().map(|j| first_jump_times(j)).collect();
    let sf = survival_functions(spec);
    for i in 0..n {
        for s in [0.25, 0.5, 0.75, 1.0] {
            let ind: Vec<f64> = firsts
                .iter()
                .map(|f| if f[i].is_none_or(|v| v > s) { 1.0 } else { 0.0 })
                .collect();
            let (est, se) = mean_se(&ind);
            out.push(
                VerificationReport::z_test(
                    &format!("survival coord {} s={s}", i + 1),
                    "P(T > s) = G(1 - s p_i)",
                    sf.marginal(i, s)?,
                    est,
                    se,
                    th.k,
                    paths,
                )
                .with_seed(seed),
            );
        }
    }
    let mut rng = stream(seed, tag("plp-joint-s"), 0);
    for b in 0..3 {
        let s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let ind: Vec<f64> = firsts
            .iter()
            .map(|f| {
                let all = f.iter().zip(&s).all(|(v, si)| v.is_none_or(|v| v > *si));
                if all {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let (est, se) = mean_se(&ind);
        out.push(
            VerificationReport::z_test(
                &format!("joint survival {}", b + 1),
                "P(T > s) = G(1 - Σ p_i s_i)",
                sf.joint(&s)?,
                est,
                se,
                th.k,
                paths,
            )
            .with_seed(seed),
        );
    }

    // ψ round trip over the admissible range.
    let mut rt: f64 = 0.0;
    for pi in &p {
        let floor = psi(spec, *pi)?;
        for k in 0..=100 {
            let u = floor + (1.0 - floor) * k as f64 / 100.0;
            rt = rt.max((psi(spec, psi_inverse(spec, u)?)? - u).abs());
        }
    }
    out.push(VerificationReport::identity("psi round trip", "max |ψ(ψ^-1(u)) - u|", 0.0, rt, 1e-10).with_seed(seed));

    // ψ(p_i T) given T < 1 is uniform on [ψ(p_i), 1].
    for (i, pi) in p.iter().enumerate() {
        let floor = psi(spec, *pi)?;
        let u: Vec<f64> = firsts
            .iter()
            .filter_map(|f| f[i].filter(|v| *v < 1.0))
            .map(|v| Ok((psi(spec, pi * v)? - floor) / (1.0 - floor)))
            .collect::<Result<_>>()?;
        out.push(
            ks_one_sample(&format!("conditioned uniformity coord {}", i + 1), &u, |v| v.clamp(0.0, 1.0), th)?
                .with_seed(seed),
        );
    }

    // pmf normalisation over the bounded support.
    let top = spec
        .glp()
        .law()
        .atoms()
        .last()
        .map_or(0, |a| a.location as i64);
    let total = pmf_total(spec, top)?;
    out.push(VerificationReport::identity("terminal pmf sums to 1", "Σ_x P(ξ_1 = x)", 1.0, total, 1e-12));
    Ok(out)
}

fn pmf_total(spec: &PlpSpec, top: i64) -> Result<f64> {
    fn rec(spec: &PlpSpec, prefix: &mut Vec<i64>, left: i64, acc: &mut f64) -> Result<()> {
        if prefix.len() + 1 == spec.n() {
            for last in 0..=left {
                prefix.push(last);
                *acc += plp_terminal_pmf(spec, prefix)?;
                prefix.pop();
            }
            return Ok(());
        }
        for v in 0..=left {
            prefix.push(v);
            rec(spec, prefix, left - v, acc)?;
            prefix.pop();
        }
        Ok(())
    }
    let mut acc = 0.0;
    rec(spec, &mut Vec::new(), top, &mut acc)?;
    Ok(acc)
}

/// Gamma checks: `ξ_1 / R_1` and the increments over `[0, ½, 1]` divided by
/// `R_1` have the Dirichlet first and second moments.
pub fn gamma_checks(spec: &GlpSpec, paths: usize, seed: u64, th: Thresholds) -> Result<Vec<VerificationReport>> {
    if *spec.family() != DensityFamily::Gamma {
        return Err(GlpError::unsupported("gamma checks", "the family must be gamma"));
    }
    let grid = PathGrid::new(vec![0.0, 0.5, 1.0])?;
    let glp = sample_paths(spec, &grid, Sampler::Master, paths, seed, "gamma-dirichlet")?;
    let m = spec.activity().m();
    let mut out = Vec::new();
    let mut dirichlet = |label: &str, alpha: &[f64], cells: Vec<Vec<f64>>| {
        let a0: f64 = alpha.iter().sum();
        for (i, ai) in alpha.iter().enumerate() {
            let xs: Vec<f64> = cells.iter().map(|c| c[i]).collect();
            let (est, se) = mean_se(&xs);
            out.push(
                VerificationReport::z_test(
                    &format!("{label} mean {}", i + 1),
                    "Dirichlet mean α_i / α_0",
                    ai / a0,
                    est,
                    se,
                    th.k,
                    paths,
                )
                .with_seed(seed),
            );
            let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
            let (est, se) = mean_se(&sq);
            out.push(
                VerificationReport::z_test(
                    &format!("{label} second moment {}", i + 1),
                    "Dirichlet E X_i² = α_i (α_i + 1) / (α_0 (α_0 + 1))",
                    ai * (ai + 1.0) / (a0 * (a0 + 1.0)),
                    est,
                    se,
                    th.k,
                    paths,
                )
                .with_seed(seed),
            );
        }
    };
    let terminal: Vec<Vec<f64>> = glp
        .iter()
        .map(|p| p.at(2).iter().map(|x| x / p.r()[2]).collect())
        .collect();
    dirichlet("xi_1 / R_1", m, terminal);
    let halves: Vec<f64> = m.iter().flat_map(|mi| [0.5 * mi, 0.5 * mi]).collect();
    let incs: Vec<Vec<f64>> = glp
        .iter()
        .map(|p| {
            (0..m.len())
                .flat_map(|i| [p.at(1)[i] / p.r()[2], (p.at(2)[i] - p.at(1)[i]) / p.r()[2]])
                .collect()
        })
        .collect();
    dirichlet("half-increments / R_1", &halves, incs);
    Ok(out)
}

/// Deterministic normalisation checks: the free density, the bridge, the
/// LRB and every GLP transition law (joint only for `n <= 2`). Lattice sums
/// use `1e-12`, quadrature `tol`.
pub fn normalization_checks(spec: &GlpSpec, s: f64, x: &[f64], t: f64, tol: f64) -> Result<Vec<VerificationReport>> {
    let fam = spec.family();
    let tol = if fam.is_lattice() { 1e-12 } else { tol };
    let total = spec.total_activity();
    let mut out = Vec::new();
    let mut push = |name: String, v: f64| out.push(VerificationReport::identity(&name, "total mass", 1.0, v, tol));
    push(
        "free density".into(),
        fam.free_range(total * t, 0.0).integrate(|p| fam.log_density(total * t, p.offset_from(0.0)).exp())?,
    );
    let sx: f64 = x.iter().sum();
    let r1 = spec.theta().posterior(s, sx)?.sample(&mut stream(0, tag("normalisation-pin"), 0))?;
    let end = BridgeEndpoint::new(fam, total, r1)?;
    push("bridge transition".into(), bridge_total_mass(fam, s * total, t * total, &end, sx)?);
    let lrb = LrbSpec::new(*fam, spec.law().clone(), total)?;
    let range = lrb.transition_range(s * total, sx, t * total)?;
    push(
        "LRB transition".into(),
        range.integrate(|p| lrb.transition_density(s * total, sx, t * total, p.x).unwrap_or(0.0))?,
    );
    let mut queries = vec![MassQuery::Sum];
    if spec.n() <= 2 {
        queries.push(MassQuery::Joint);
        if spec.n() == 2 {
            queries.push(MassQuery::Terminal);
        }
    }
    for i in 0..spec.n() {
        queries.push(MassQuery::Marginal(i));
        queries.push(MassQuery::FullyConditioned(i));
    }
    for q in queries {
        push(format!("{q:?} transition"), transition_mass(spec, q, s, x, t)?);
    }
    Ok(out)
}

/// Bridge increments sampled at `at` of `horizon` against their
/// closed-form or numerical CDF. Lattice draws go through the randomised
/// probability integral transform.
pub fn bridge_sampling_check(
    fam: &DensityFamily,
    horizon: f64,
    pin: f64,
    at: f64,
    draws: usize,
    seed: u64,
    th: Thresholds,
) -> Result<VerificationReport> {
    let end = BridgeEndpoint::new(fam, horizon, pin)?;
    let cdf = |y: f64| bridge_increment_cdf(fam, at, horizon - at, pin, y);
    let name = format!("bridge increment law {fam:?}");
    let vals = par_draws(draws, seed, "bridge-sampling", |rng| {
        let x = sample_bridge_path(fam, &end, &[at], rng)?[0];
        pit_or_value(fam.is_lattice(), x, &cdf, rng)
    })?;
    finish_pit(&name, fam.is_lattice(), &vals, &cdf, seed, th)
}

/// LRB values sampled at `t` against the transition CDF from the origin.
pub fn lrb_sampling_check(lrb: &LrbSpec, t: f64, draws: usize, seed: u64, th: Thresholds) -> Result<VerificationReport> {
    let cdf = |y: f64| lrb.transition_cdf(0.0, 0.0, t, y);
    let lattice = lrb.family().is_lattice();
    let vals = par_draws(draws, seed, "lrb-sampling", |rng| {
        let x = lrb.sample(&[t], rng)?[0];
        pit_or_value(lattice, x, &cdf, rng)
    })?;
    finish_pit("LRB marginal law", lattice, &vals, &cdf, seed, th)
}

fn pit_or_value<F, R>(lattice: bool, x: f64, cdf: &F, rng: &mut R) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    R: Rng + ?Sized,
{
    if lattice {
        Ok(randomized_pit(cdf(x - 1.0)?, cdf(x)?, rng))
    } else {
        Ok(x)
    }
}

fn finish_pit<F: Fn(f64) -> Result<f64>>(
    name: &str,
    lattice: bool,
    vals: &[f64],
    cdf: &F,
    seed: u64,
    th: Thresholds,
) -> Result<VerificationReport> {
    let rep = if lattice {
        ks_one_sample(name, vals, |v| v.clamp(0.0, 1.0), th)?
    } else {
        ks_one_sample(name, vals, |y| cdf(y).unwrap_or(f64::NAN), th)?
    };
    Ok(rep.with_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::GeneratingLaw;

    #[test]
    fn free_interval_probabilities() {
        let bm = DensityFamily::Brownian { sigma: 1.0 };
        let v = free_interval_probability(&bm, 1.0, -1.959963984540054, 1.959963984540054).unwrap();
        assert!((v - 0.95).abs() < 1e-9);
        let po = free_interval_probability(&DensityFamily::Poisson, 2.0, -0.5, 0.5).unwrap();
        assert!((po - (-2.0f64).exp()).abs() < 1e-15);
        let ga = free_interval_probability(&DensityFamily::Gamma, 1.0, -3.0, 1.0).unwrap();
        assert!((ga - (1.0 - (-1.0f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn harmonicity_holds() {
        let law = GeneratingLaw::from_pairs(&[(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        let spec = GlpSpec::new(DensityFamily::Brownian { sigma: 1.0 }, law, vec![1.0, 2.0]).unwrap();
        let r = theta_harmonicity(&spec, 0.2, 0.4, 0.7, 1e-6).unwrap();
        assert!(r.pass, "{r}");
    }

    #[test]
    fn pmf_total_is_one() {
        let spec = PlpSpec::new(GeneratingLaw::geometric_truncated(0.5, 10).unwrap(), vec![1.0, 2.0, 0.5]).unwrap();
        assert!((pmf_total(&spec, 10).unwrap() - 1.0).abs() < 1e-12);
    }
}
