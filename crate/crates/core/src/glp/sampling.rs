//! Path samplers: the master-bridge construction and the Markov chain of
//! transition laws. The two are independent routes to the same law.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GlpPath, GlpSpec, PathGrid};
use crate::error::{GlpError, Result};
use crate::kernels::{sample_bridge_path, BridgeEndpoint};

/// Path construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Master,
    Markov,
    Anticipative,
}

impl std::str::FromStr for Sampler {
    type Err = GlpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "master" => Ok(Sampler::Master),
            "markov" => Ok(Sampler::Markov),
            "anticipative" => Ok(Sampler::Anticipative),
            other => Err(GlpError::Config(format!(
                "unknown sampler `{other}` (expected master, markov or anticipative)"
            ))),
        }
    }
}

/// Samples the master LRB on `[0, Σm]` at every time `u_{i-1} + t m_i` and
/// cuts it into blocks. Exact in law; the grid may end at 1.
pub fn sample_glp_master<R: Rng + ?Sized>(spec: &GlpSpec, grid: &PathGrid, rng: &mut R) -> Result<GlpPath> {
    let act = spec.activity();
    let (m, u) = (act.m(), act.u());
    let n = spec.n();
    let mut master: Vec<f64> = Vec::with_capacity(n * grid.len() + 1);
    for i in 0..n {
        master.push(u[i]);
        master.extend(grid.times().iter().map(|&t| u[i] + t * m[i]));
    }
    master.sort_by(f64::total_cmp);
    master.dedup();
    let z = spec.law().sample(rng)?;
    let end = BridgeEndpoint::new(spec.family(), act.total(), z)?;
    let values = sample_bridge_path(spec.family(), &end, &master, rng)?;
    let lookup = |time: f64| -> f64 {
        let k = master.partition_point(|&s| s < time);
        values[k]
    };
    let rows = grid
        .times()
        .iter()
        .map(|&t| {
            (0..n)
                .map(|i| if t == 0.0 { 0.0 } else { lookup(u[i] + t * m[i]) - lookup(u[i]) })
                .collect()
        })
        .collect();
    GlpPath::new(grid.clone(), rows)
}

/// Sequential sampler from the transition law. Each step draws `R_1` from
/// its conditional law, the master-bridge increment `ΔR` towards it, and
/// splits `ΔR` across coordinates by a bridge pinned at `ΔR`. The grid must
/// end before 1; use [`sample_terminal`] for the final value.
pub fn sample_glp_markov<R: Rng + ?Sized>(spec: &GlpSpec, grid: &PathGrid, rng: &mut R) -> Result<GlpPath> {
    let times = grid.times();
    let last = times[times.len() - 1];
    if last >= 1.0 {
        return Err(GlpError::Horizon {
            op: "Markov sampler",
            t: last,
            range: "[0, 1)",
        });
    }
    let n = spec.n();
    let mut rows = Vec::with_capacity(times.len());
    let mut x = vec![0.0; n];
    let mut r = 0.0;
    rows.push(x.clone());
    for w in times.windows(2) {
        let dr = markov_step(spec, w[0], r, w[1], &mut x, rng)?;
        r += dr;
        rows.push(x.clone());
    }
    GlpPath::new(grid.clone(), rows)
}

/// One transition `s → t` from coordinates `x` with master value `r`;
/// updates `x` in place and returns the master increment.
fn markov_step<R: Rng + ?Sized>(spec: &GlpSpec, s: f64, r: f64, t: f64, x: &mut [f64], rng: &mut R) -> Result<f64> {
    let total = spec.total_activity();
    let z = match spec.law().as_dirac() {
        Some(z) => z,
        None => spec.theta().posterior(s, r)?.sample(rng)?,
    };
    let fam = spec.family();
    let dist = z - r;
    let dr = if fam.is_subordinator() && dist <= 0.0 {
        0.0
    } else {
        let end = BridgeEndpoint::new(fam, total * (1.0 - s), dist)?;
        sample_bridge_path(fam, &end, &[total * (t - s)], rng)?[0]
    };
    split(spec, t - s, dr, x, rng)?;
    Ok(dr)
}

/// Adds to `x` the coordinate increments over a span `h` given that they sum
/// to `dr`: values at times `h u_i` of a bridge on `[0, h Σm]` pinned at `dr`.
fn split<R: Rng + ?Sized>(spec: &GlpSpec, h: f64, dr: f64, x: &mut [f64], rng: &mut R) -> Result<()> {
    let n = x.len();
    let fam = spec.family();
    if n == 1 {
        x[0] += dr;
        return Ok(());
    }
    if fam.is_subordinator() && dr <= 0.0 {
        return Ok(());
    }
    let u = spec.activity().u();
    let cuts: Vec<f64> = (1..n).map(|i| h * u[i]).collect();
    let end = BridgeEndpoint::new(fam, h * spec.total_activity(), dr)?;
    let b = sample_bridge_path(fam, &end, &cuts, rng)?;
    let mut prev = 0.0;
    for i in 0..n - 1 {
        x[i] += b[i] - prev;
        prev = b[i];
    }
    x[n - 1] += dr - prev;
    Ok(())
}

/// Draws `ξ_1` given `ξ_s = x`.
pub fn sample_terminal<R: Rng + ?Sized>(spec: &GlpSpec, s: f64, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if x.len() != spec.n() {
        return Err(GlpError::domain("terminal sampler", "state has the wrong dimension"));
    }
    let r: f64 = x.iter().sum();
    let z = spec.theta().posterior(s, r)?.sample(rng)?;
    let mut out = x.to_vec();
    split(spec, 1.0 - s, z - r, &mut out, rng)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::DensityFamily;
    use crate::measures::GeneratingLaw;
    use crate::rng::stream;

    #[test]
    fn master_paths_are_consistent() {
        let law = GeneratingLaw::from_pairs(&[(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        let spec = GlpSpec::new(DensityFamily::Brownian { sigma: 1.0 }, law, vec![1.0, 2.0, 3.0]).unwrap();
        let grid = PathGrid::uniform(4, 1.0).unwrap();
        let mut rng = stream(1, 1, 1);
        for _ in 0..50 {
            let p = sample_glp_master(&spec, &grid, &mut rng).unwrap();
            assert_eq!(p.at(0), &[0.0, 0.0, 0.0]);
            let r1 = p.r()[4];
            assert!((r1.abs() - 2.0).abs() < 1e-12, "{r1}");
        }
    }

    #[test]
    fn single_block_is_the_lrb() {
        let spec = GlpSpec::new(DensityFamily::Poisson, GeneratingLaw::dirac(3.0), vec![2.0]).unwrap();
        let grid = PathGrid::uniform(5, 1.0).unwrap();
        let mut rng = stream(2, 2, 2);
        let p = sample_glp_master(&spec, &grid, &mut rng).unwrap();
        assert_eq!(p.coord(0)[5], 3.0);
        assert!(p.coord(0).windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn markov_rejects_terminal_time() {
        let spec = GlpSpec::new(DensityFamily::Gamma, GeneratingLaw::dirac(1.0), vec![1.0, 1.0]).unwrap();
        let mut rng = stream(3, 3, 3);
        assert!(sample_glp_markov(&spec, &PathGrid::uniform(2, 1.0).unwrap(), &mut rng).is_err());
        let p = sample_glp_markov(&spec, &PathGrid::uniform(3, 0.9).unwrap(), &mut rng).unwrap();
        assert!(p.r().windows(2).all(|w| w[1] >= w[0]));
        let z = sample_terminal(&spec, 0.9, p.at(3), &mut rng).unwrap();
        assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
