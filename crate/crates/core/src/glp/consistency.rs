//! Weak Markov consistency of each coordinate, and the failure of strong
//! consistency: a coordinate is Markov in its own filtration, but its
//! increments still depend on the other coordinates through `R_s`.

use rayon::prelude::*;

use super::laws::marginal_transition_cdf;
use super::{sample_glp_master, GlpPath, GlpSpec, PathGrid};
use crate::error::{GlpError, Result};
use crate::rng::{stream, tag};
use crate::verify::{ks_one_sample, ols, randomized_pit, Thresholds, VerificationReport};

/// Times, coordinate and Monte Carlo budget of a consistency experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyDesign {
    pub s: f64,
    pub t: f64,
    /// Coordinate under test, zero-based.
    pub coord: usize,
    pub paths: usize,
    pub seed: u64,
}

impl ConsistencyDesign {
    pub fn new(s: f64, t: f64, paths: usize, seed: u64) -> Self {
        ConsistencyDesign {
            s,
            t,
            coord: 0,
            paths,
            seed,
        }
    }

    fn validate(&self, spec: &GlpSpec) -> Result<()> {
        if !(0.0 < self.s && self.s < self.t && self.t < 1.0) {
            return Err(GlpError::Horizon {
                op: "consistency experiment",
                t: self.t,
                range: "0 < s < t < 1",
            });
        }
        if spec.n() < 2 {
            return Err(GlpError::InvalidSpec("consistency experiments need at least two coordinates".into()));
        }
        if self.coord >= spec.n() {
            return Err(GlpError::domain(
                "consistency experiment",
                format!("coordinate {} out of range", self.coord),
            ));
        }
        Ok(())
    }
}

fn sample_many(spec: &GlpSpec, grid: &PathGrid, d: &ConsistencyDesign, label: &str) -> Result<Vec<GlpPath>> {
    let tg = tag(label);
    (0..d.paths as u64)
        .into_par_iter()
        .map(|j| sample_glp_master(spec, grid, &mut stream(d.seed, tg, j)))
        .collect()
}

/// Probability integral transforms of `ξ^{(i)}_t` under the law of the
/// coordinate given only `ξ^{(i)}_s`, on the paths whose earlier value
/// `ξ^{(i)}_{s/2}` lies above its median. Uniform iff the extra past is
/// irrelevant.
pub fn weak_consistency_test(spec: &GlpSpec, design: &ConsistencyDesign, th: Thresholds) -> Result<VerificationReport> {
    design.validate(spec)?;
    let (s, t, i) = (design.s, design.t, design.coord);
    let grid = PathGrid::new(vec![0.0, s / 2.0, s, t])?;
    let paths = sample_many(spec, &grid, design, "weak-consistency")?;
    let early: Vec<f64> = paths.iter().map(|p| p.at(1)[i]).collect();
    let mut sorted = early.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let lattice = spec.family().is_lattice();
    let tg = tag("weak-consistency-pit");
    let pit: Vec<f64> = paths
        .par_iter()
        .enumerate()
        .filter(|(j, _)| early[*j] > median)
        .map(|(j, p)| {
            let (x, y) = (p.at(2)[i], p.at(3)[i]);
            let f = marginal_transition_cdf(spec, i, s, x, t, y)?;
            if lattice {
                let below = marginal_transition_cdf(spec, i, s, x, t, y - 1.0)?;
                Ok(randomized_pit(below, f, &mut stream(design.seed, tg, j as u64)))
            } else {
                Ok(f)
            }
        })
        .collect::<Result<_>>()?;
    Ok(ks_one_sample("weak-consistency", &pit, |u| u.clamp(0.0, 1.0), th)?.with_seed(design.seed))
}

/// Regresses `ξ^{(i)}_t - ξ^{(i)}_s` on `(1, ξ^{(i)}_s, R_s)`. Returns the
/// GLP report, which passes when the `R_s` coefficient is nonzero at `k`
/// standard errors, and the control, which reweights the same paths by
/// `Θ_t(R_t)^{-1}` to the free process and passes when the coefficient is
/// within `k` standard errors of zero.
pub fn strong_failure_regression(
    spec: &GlpSpec,
    design: &ConsistencyDesign,
    th: Thresholds,
) -> Result<(VerificationReport, VerificationReport)> {
    design.validate(spec)?;
    let (s, t, i) = (design.s, design.t, design.coord);
    let grid = PathGrid::new(vec![0.0, s, t])?;
    let paths = sample_many(spec, &grid, design, "strong-failure")?;
    let x: Vec<Vec<f64>> = paths.iter().map(|p| vec![1.0, p.at(1)[i], p.r()[1]]).collect();
    let y: Vec<f64> = paths.iter().map(|p| p.at(2)[i] - p.at(1)[i]).collect();
    let w: Vec<f64> = paths
        .iter()
        .map(|p| Ok((-spec.theta().log_big_theta(t, p.r()[2])?).exp()))
        .collect::<Result<_>>()?;
    let fit = ols(&x, &y, None)?;
    let glp = VerificationReport::z_reject(
        "strong-failure",
        "R_s coefficient of the coordinate increment is 0",
        0.0,
        fit.coef[2],
        fit.se[2],
        th.k,
        paths.len(),
    )
    .with_seed(design.seed);
    let cfit = ols(&x, &y, Some(&w))?;
    let control = VerificationReport::z_test(
        "strong-failure-control",
        "R_s coefficient under the free law is 0",
        0.0,
        cfit.coef[2],
        cfit.se[2],
        th.k,
        paths.len(),
    )
    .with_seed(design.seed);
    Ok((glp, control))
}

/// Weak consistency, strong failure and its control, in that order.
pub fn consistency_experiment(
    spec: &GlpSpec,
    design: &ConsistencyDesign,
    th: Thresholds,
) -> Result<Vec<VerificationReport>> {
    let weak = weak_consistency_test(spec, design, th)?;
    let (strong, control) = strong_failure_regression(spec, design, th)?;
    Ok(vec![weak, strong, control])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::DensityFamily;
    use crate::measures::GeneratingLaw;

    #[test]
    fn rejects_bad_designs() {
        let one = GlpSpec::new(DensityFamily::Brownian { sigma: 1.0 }, GeneratingLaw::dirac(0.0), vec![1.0]).unwrap();
        let d = ConsistencyDesign::new(0.5, 0.75, 100, 1);
        assert!(weak_consistency_test(&one, &d, Thresholds::default()).is_err());
        let two = GlpSpec::new(DensityFamily::Brownian { sigma: 1.0 }, GeneratingLaw::dirac(0.0), vec![1.0, 1.0]).unwrap();
        let bad = ConsistencyDesign::new(0.8, 0.75, 100, 1);
        assert!(strong_failure_regression(&two, &bad, Thresholds::default()).is_err());
    }

    #[test]
    fn weak_consistency_poisson() {
        let law = GeneratingLaw::from_pairs(&[(2.0, 0.5), (6.0, 0.5)]).unwrap();
        let spec = GlpSpec::new(DensityFamily::Poisson, law, vec![1.0, 2.0]).unwrap();
        let d = ConsistencyDesign::new(0.4, 0.7, 2000, 5);
        let rep = weak_consistency_test(&spec, &d, Thresholds::default()).unwrap();
        assert!(rep.pass, "{rep}");
    }
}
