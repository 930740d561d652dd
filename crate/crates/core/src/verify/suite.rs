//! Named verification suites. Every suite is deterministic given the spec,
//! the budget and the master seed; its tests run in parallel.

use rayon::prelude::*;

use super::checks::{
    bridge_sampling_check, bridge_variance_check, consistency_reports, filter_identities, filter_martingales,
    free_theta_martingale, gamma_checks, harness_check, lrb_sampling_check, measure_change_check,
    normalization_checks, plp_checks, residual_martingales, sampler_equivalence, theta_harmonicity,
    z_covariance_check,
};
use super::report::{Thresholds, VerificationReport};
use crate::error::{GlpError, Result};
use crate::glp::{sample_glp_master, GlpSpec, PathGrid, Sampler};
use crate::kernels::DensityFamily;
use crate::lrb::LrbSpec;
use crate::plp::PlpSpec;
use crate::rng::{stream, tag};

/// Suite names accepted by [`run_suite`].
pub const SUITES: &[&str] = &["kernels", "lrb", "glp-core", "blp-core", "plp-core", "gamma-core"];

type Job<'a> = Box<dyn Fn() -> Result<Vec<VerificationReport>> + Send + Sync + 'a>;

fn job<'a, F>(f: F) -> Job<'a>
where
    F: Fn() -> Result<Vec<VerificationReport>> + Send + Sync + 'a,
{
    Box::new(f)
}

/// Runs `suite` on `spec` with `budget` Monte Carlo paths per test.
/// Suites with martingale tests need a budget of at least
/// [`super::MIN_PATHS`].
pub fn run_suite(
    spec: &GlpSpec,
    suite: &str,
    budget: usize,
    seed: u64,
    th: Thresholds,
) -> Result<Vec<VerificationReport>> {
    if budget == 0 {
        return Err(GlpError::Config("the sample budget must be positive".into()));
    }
    let jobs = match suite {
        "kernels" => kernels_suite(spec, budget, seed, th)?,
        "lrb" => lrb_suite(spec, budget, seed, th)?,
        "glp-core" => glp_suite(spec, budget, seed, th)?,
        "blp-core" => blp_suite(spec, budget, seed, th)?,
        "plp-core" => plp_suite(spec, budget, seed, th)?,
        "gamma-core" => gamma_suite(spec, budget, seed, th)?,
        other => return Err(GlpError::UnknownSuite(other.to_string())),
    };
    let nested: Vec<Vec<VerificationReport>> = jobs.par_iter().map(|j| j()).collect::<Result<_>>()?;
    // Deterministic identities carry no seed of their own; stamp the run's.
    Ok(nested.into_iter().flatten().map(|r| r.with_seed(seed)).collect())
}

/// A reachable pin for bridge checks: a draw from the law of `R_1`.
fn typical_pin(spec: &GlpSpec, seed: u64) -> Result<f64> {
    let mut rng = stream(seed, tag("suite-pin"), 0);
    for _ in 0..64 {
        let z = spec.law().sample(&mut rng)?;
        if !spec.family().is_subordinator() || z > 0.0 {
            return Ok(z);
        }
    }
    Err(GlpError::domain("suite", "the law of R_1 puts no mass on reachable bridge pins"))
}

/// A state observed at `s` on a master path, for quadrature checks.
fn typical_state(spec: &GlpSpec, s: f64, seed: u64) -> Result<Vec<f64>> {
    let grid = PathGrid::new(vec![0.0, s])?;
    let mut rng = stream(seed, tag("suite-state"), 0);
    Ok(sample_glp_master(spec, &grid, &mut rng)?.at(1).to_vec())
}

fn kernels_suite<'a>(spec: &'a GlpSpec, budget: usize, seed: u64, th: Thresholds) -> Result<Vec<Job<'a>>> {
    let fam = *spec.family();
    let total = spec.total_activity();
    let pin = typical_pin(spec, seed)?;
    Ok(vec![
        job(move || Ok(vec![bridge_sampling_check(&fam, total, pin, 0.5 * total, budget, seed, th)?])),
        job(move || {
            let x = typical_state(spec, 0.3, seed)?;
            let all = normalization_checks(spec, 0.3, &x, 0.6, 1e-5)?;
            Ok(all.into_iter().take(2).collect())
        }),
    ])
}

fn lrb_suite<'a>(spec: &'a GlpSpec, budget: usize, seed: u64, th: Thresholds) -> Result<Vec<Job<'a>>> {
    let total = spec.total_activity();
    let lrb = LrbSpec::new(*spec.family(), spec.law().clone(), total)?;
    let lrb2 = lrb.clone();
    Ok(vec![
        job(move || Ok(vec![lrb_sampling_check(&lrb, 0.5 * total, budget, seed, th)?])),
        job(move || {
            let x = typical_state(spec, 0.3, seed)?;
            let sx: f64 = x.iter().sum();
            let range = lrb2.transition_range(0.3 * total, sx, 0.6 * total)?;
            let mass = range.integrate(|p| lrb2.transition_density(0.3 * total, sx, 0.6 * total, p.x).unwrap_or(0.0))?;
            let tol = if spec.family().is_lattice() { 1e-12 } else { 1e-5 };
            Ok(vec![VerificationReport::identity("LRB transition", "total mass", 1.0, mass, tol)])
        }),
        job(move || {
            let grid = PathGrid::uniform(8, 0.8)?;
            Ok(vec![free_theta_martingale(spec, grid.times(), budget, seed, th)?])
        }),
    ])
}

fn glp_suite<'a>(spec: &'a GlpSpec, budget: usize, seed: u64, th: Thresholds) -> Result<Vec<Job<'a>>> {
    let mut jobs = vec![
        job(move || sampler_equivalence(spec, &[0.25, 0.5, 0.75], Sampler::Markov, budget, seed, th)),
        job(move || {
            let x = typical_state(spec, 0.3, seed)?;
            let mut out = normalization_checks(spec, 0.3, &x, 0.6, 1e-5)?;
            out.push(theta_harmonicity(spec, 0.3, x.iter().sum(), 0.6, 1e-6)?);
            Ok(out)
        }),
        job(move || measure_change_check(spec, 0.5, 5, budget, seed, th)),
        job(move || {
            let grid = PathGrid::uniform(8, 0.8)?;
            Ok(vec![free_theta_martingale(spec, grid.times(), budget, seed, th)?])
        }),
    ];
    if spec.family().is_integrable() {
        jobs.push(job(move || residual_martingales(spec, &PathGrid::uniform(8, 0.8)?, budget, seed, th)));
        jobs.push(job(move || Ok(vec![harness_check(spec, [0.2, 0.4, 0.6, 0.8], budget, seed, th)?])));
    }
    if spec.n() >= 2 {
        jobs.push(job(move || consistency_reports(spec, 0.5, 0.75, budget, seed, th)));
    }
    Ok(jobs)
}

fn blp_suite<'a>(spec: &'a GlpSpec, budget: usize, seed: u64, th: Thresholds) -> Result<Vec<Job<'a>>> {
    if !matches!(spec.family(), DensityFamily::Brownian { .. }) || spec.law().continuous().is_some() {
        return Err(GlpError::unsupported(
            "blp-core suite",
            "needs the Brownian family and a purely atomic law",
        ));
    }
    Ok(vec![
        job(move || z_covariance_check(spec.activity().m(), budget, seed, th)),
        job(move || sampler_equivalence(spec, &[0.25, 0.5, 0.75], Sampler::Anticipative, budget, seed, th)),
        job(move || Ok(vec![bridge_variance_check(spec, 0.5, budget, seed, th)?])),
        job(move || filter_identities(spec, 200, seed)),
        job(move || filter_martingales(spec, &PathGrid::uniform(8, 0.8)?, budget, seed, th)),
    ])
}

fn plp_suite<'a>(spec: &'a GlpSpec, budget: usize, seed: u64, th: Thresholds) -> Result<Vec<Job<'a>>> {
    let plp = PlpSpec::from_glp(spec.clone())?;
    Ok(vec![job(move || plp_checks(&plp, budget, seed, th))])
}

fn gamma_suite<'a>(spec: &'a GlpSpec, budget: usize, seed: u64, th: Thresholds) -> Result<Vec<Job<'a>>> {
    if *spec.family() != DensityFamily::Gamma {
        return Err(GlpError::unsupported("gamma-core suite", "needs the gamma family"));
    }
    Ok(vec![job(move || gamma_checks(spec, budget, seed, th))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::GeneratingLaw;

    fn spec() -> GlpSpec {
        GlpSpec::new(DensityFamily::Brownian { sigma: 1.0 }, GeneratingLaw::dirac(1.0), vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn rejects_zero_budget_and_unknown_names() {
        let th = Thresholds::default();
        assert!(matches!(run_suite(&spec(), "kernels", 0, 1, th), Err(GlpError::Config(_))));
        assert!(matches!(run_suite(&spec(), "nope", 10, 1, th), Err(GlpError::UnknownSuite(_))));
        assert!(run_suite(&spec(), "gamma-core", 10, 1, th).is_err());
    }

    #[test]
    fn kernels_suite_is_deterministic() {
        let th = Thresholds::default();
        let a = run_suite(&spec(), "kernels", 500, 3, th).unwrap();
        let b = run_suite(&spec(), "kernels", 500, 3, th).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.pass), "{}", VerificationReport::table(&a));
        assert!(a.iter().all(|r| r.seed == 3));
    }
}
