//! Acceptance suite: one PASS/FAIL line per criterion, then a non-zero exit
//! if any criterion failed. Runs without the libtest harness so the lines
//! are always printed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use glp_core::glp::{GlpSpec, Sampler};
use glp_core::measures::GeneratingLaw;
use glp_core::plp::PlpSpec;
use glp_core::verify::checks::{
    consistency_reports, gamma_checks, harness_check, martingale_checks, measure_change_check, normalization_checks,
    plp_checks, sampler_equivalence, theta_harmonicity, z_covariance_check,
};
use glp_core::verify::{Thresholds, VerificationReport};
use glp_core::{DensityFamily, Result};

const SEED: u64 = 20240607;
const BM: DensityFamily = DensityFamily::Brownian { sigma: 1.0 };

fn two_point() -> GeneratingLaw {
    GeneratingLaw::from_pairs(&[(-2.0, 0.5), (2.0, 0.5)]).unwrap()
}

fn brownian3() -> GlpSpec {
    GlpSpec::new(BM, two_point(), vec![1.0, 2.0, 3.0]).unwrap()
}

fn brownian2() -> GlpSpec {
    GlpSpec::new(BM, two_point(), vec![1.0, 1.0]).unwrap()
}

fn poisson2() -> GlpSpec {
    GlpSpec::new(
        DensityFamily::Poisson,
        GeneratingLaw::geometric_truncated(0.5, 20).unwrap(),
        vec![1.0, 2.0],
    )
    .unwrap()
}

fn gamma_law() -> GeneratingLaw {
    GeneratingLaw::from_pairs(&[(1.0, 0.5), (3.0, 0.5)]).unwrap()
}

struct Outcome {
    reports: Vec<VerificationReport>,
    notes: Vec<String>,
    extra_fail: bool,
}

impl Outcome {
    fn pass(&self) -> bool {
        !self.extra_fail && !self.reports.is_empty() && self.reports.iter().all(|r| r.pass)
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Result<Vec<VerificationReport>>) -> Outcome {
    let start = Instant::now();
    let res = f();
    let took = start.elapsed();
    let mut notes = vec![format!("{:.1}s", took.as_secs_f64())];
    let over = limit.is_some_and(|l| took > l);
    if let Some(l) = limit {
        notes.push(format!("limit {}s", l.as_secs()));
    }
    match res {
        Ok(reports) => Outcome {
            reports,
            notes,
            extra_fail: over,
        },
        Err(e) => {
            notes.push(format!("error: {e}"));
            Outcome {
                reports: Vec::new(),
                notes,
                extra_fail: true,
            }
        }
    }
}

fn criterion(id: u32, title: &str, out: Outcome, all_ok: &mut bool) {
    let passed = out.reports.iter().filter(|r| r.pass).count();
    let verdict = if out.pass() { "PASS" } else { "FAIL" };
    println!(
        "criterion {id} {verdict}: {title} [{passed}/{} checks, {}]",
        out.reports.len(),
        out.notes.join(", ")
    );
    for r in out.reports.iter().filter(|r| !r.pass) {
        println!("    failed: {r}");
    }
    if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
        for r in &out.reports {
            println!("    {r}");
        }
    }
    *all_ok &= out.pass();
}

fn main() -> ExitCode {
    let th = Thresholds::default();
    let mut ok = true;

    let out = timed(Some(Duration::from_secs(60)), || {
        let mut v = sampler_equivalence(&brownian3(), &[0.25, 0.5, 0.75], Sampler::Markov, 10_000, SEED, th)?;
        v.extend(sampler_equivalence(&poisson2(), &[0.25, 0.5, 0.75], Sampler::Markov, 10_000, SEED, th)?);
        Ok(v)
    });
    criterion(1, "master and Markov samplers agree per coordinate (KS, alpha 0.01)", out, &mut ok);

    let out = timed(None, || z_covariance_check(&[1.0, 2.0, 3.0], 100_000, SEED, th));
    criterion(2, "Z covariance within 3 SE and sum of Z zero to 1e-12", out, &mut ok);

    let out = timed(Some(Duration::from_secs(180)), || {
        let spec = brownian3();
        let mut v = vec![
            theta_harmonicity(&spec, 0.2, 0.7, 0.6, 1e-6)?,
            theta_harmonicity(&poisson2(), 0.2, 2.0, 0.6, 1e-6)?,
        ];
        v.extend(martingale_checks(&spec, 8, 0.8, 100_000, SEED, th)?);
        Ok(v)
    });
    criterion(3, "Theta harmonicity and martingale tests for M, Z, filter weights, free Theta", out, &mut ok);

    let out = timed(None, || {
        let times = [0.2, 0.4, 0.6, 0.8];
        Ok(vec![
            harness_check(&brownian3(), times, 100_000, SEED, th)?,
            harness_check(&poisson2(), times, 100_000, SEED, th)?,
        ])
    });
    criterion(4, "harness statistic 0 within 3 SE in every bin", out, &mut ok);

    let out = timed(None, || measure_change_check(&brownian3(), 0.5, 5, 100_000, SEED, th));
    criterion(5, "reweighted box probabilities match the free law within 3 SE", out, &mut ok);

    let out = timed(None, || consistency_reports(&brownian2(), 0.5, 0.75, 20_000, SEED, th));
    criterion(6, "weak consistency holds, strong consistency fails, control is null", out, &mut ok);

    let out = timed(None, || {
        let plp = PlpSpec::from_glp(poisson2())?;
        plp_checks(&plp, 100_000, SEED, th)
    });
    criterion(7, "Poisson intensities, survival, psi round trip, conditioned uniformity", out, &mut ok);

    let out = timed(None, || {
        let spec = GlpSpec::new(DensityFamily::Gamma, gamma_law(), vec![1.0, 2.0, 3.0])?;
        gamma_checks(&spec, 100_000, SEED, th)
    });
    criterion(8, "gamma coordinates over R_1 have Dirichlet moments", out, &mut ok);

    let out = timed(None, || {
        let mut v = normalization_checks(&brownian2(), 0.3, &[0.4, -0.9], 0.6, 1e-5)?;
        v.extend(normalization_checks(&poisson2(), 0.3, &[1.0, 2.0], 0.6, 1e-12)?);
        let gamma = GlpSpec::new(DensityFamily::Gamma, gamma_law(), vec![1.0, 2.0])?;
        v.extend(normalization_checks(&gamma, 0.3, &[0.1, 0.2], 0.6, 1e-5)?);
        let stable = GlpSpec::new(DensityFamily::StableHalf { c: 1.0 }, gamma_law(), vec![1.0, 1.0])?;
        v.extend(normalization_checks(&stable, 0.3, &[0.05, 0.1], 0.6, 1e-5)?);
        Ok(v)
    });
    criterion(9, "every transition law has total mass 1 (1e-5 quadrature, 1e-12 lattice)", out, &mut ok);

    if ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
