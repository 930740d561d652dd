//! Brownian Liouville processes.
//!
//! With Brownian coordinates the GLP has the anticipative form
//! `ξ_t = t (p R_1 + σ Z) + σ √m ∘ β_t`, `p = m / Σm`, where `Z` is a
//! centred Gaussian vector with `Cov(Z_i, Z_j) = δ_ij m_i - m_i m_j / Σm`
//! and the `β^{(i)}` are independent standard Brownian bridges.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GlpError, Result};
use crate::glp::{GlpPath, GlpSpec, PathGrid};
use crate::kernels::{sample_bridge_path, BridgeEndpoint, DensityFamily};
use crate::quad::log_sum_exp;

/// One draw of the ingredients of the anticipative representation.
#[derive(Debug, Clone, PartialEq)]
pub struct BlpDecomposition {
    pub r1: f64,
    /// Sums to zero by construction.
    pub z: Vec<f64>,
    /// `bridges[i][k]`: standard bridge `i` at grid time `k`.
    pub bridges: Vec<Vec<f64>>,
}

fn brownian_sigma(spec: &GlpSpec, op: &'static str) -> Result<f64> {
    match *spec.family() {
        DensityFamily::Brownian { sigma } => Ok(sigma),
        other => Err(GlpError::unsupported(op, format!("{other:?} is not Brownian"))),
    }
}

/// Draws `Z` with `ΣZ = 0` exactly: `Z_i = G_i - p_i ΣG` for independent
/// `G_i ~ N(0, m_i)`, with the last entry set to minus the sum of the rest.
pub fn sample_z<R: Rng + ?Sized>(m: &[f64], rng: &mut R) -> Vec<f64> {
    let total: f64 = m.iter().sum();
    let g: Vec<f64> = m
        .iter()
        .map(|mi| {
            let e: f64 = StandardNormal.sample(rng);
            mi.sqrt() * e
        })
        .collect();
    let sg: f64 = g.iter().sum();
    let n = m.len();
    let mut z: Vec<f64> = g.iter().zip(m).map(|(gi, mi)| gi - mi / total * sg).collect();
    z[n - 1] = -z[..n - 1].iter().sum::<f64>();
    z
}

/// `Cov(Z)_{ij} = δ_ij m_i - m_i m_j / Σm`.
pub fn z_covariance(m: &[f64]) -> Vec<Vec<f64>> {
    let total: f64 = m.iter().sum();
    m.iter()
        .enumerate()
        .map(|(i, mi)| {
            m.iter()
                .enumerate()
                .map(|(j, mj)| (if i == j { *mi } else { 0.0 }) - mi * mj / total)
                .collect()
        })
        .collect()
}

pub fn sample_blp_decomposition<R: Rng + ?Sized>(
    spec: &GlpSpec,
    grid: &PathGrid,
    rng: &mut R,
) -> Result<BlpDecomposition> {
    brownian_sigma(spec, "anticipative sampler")?;
    let r1 = spec.law().sample(rng)?;
    let z = sample_z(spec.activity().m(), rng);
    let std = DensityFamily::Brownian { sigma: 1.0 };
    let end = BridgeEndpoint::new(&std, 1.0, 0.0)?;
    let bridges = (0..spec.n())
        .map(|_| sample_bridge_path(&std, &end, grid.times(), rng))
        .collect::<Result<_>>()?;
    Ok(BlpDecomposition { r1, z, bridges })
}

/// Assembles the path `t (p R_1 + σ Z) + σ √m ∘ β_t` from a decomposition.
pub fn assemble_blp_path(spec: &GlpSpec, grid: &PathGrid, d: &BlpDecomposition) -> Result<GlpPath> {
    let sigma = brownian_sigma(spec, "anticipative sampler")?;
    let m = spec.activity().m();
    let p = spec.activity().shares();
    let rows = grid
        .times()
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            (0..spec.n())
                .map(|i| t * (p[i] * d.r1 + sigma * d.z[i]) + sigma * m[i].sqrt() * d.bridges[i][k])
                .collect()
        })
        .collect();
    GlpPath::new(grid.clone(), rows)
}

/// Samples a Brownian GLP through the anticipative representation.
pub fn sample_blp_anticipative<R: Rng + ?Sized>(spec: &GlpSpec, grid: &PathGrid, rng: &mut R) -> Result<GlpPath> {
    let d = sample_blp_decomposition(spec, grid, rng)?;
    assemble_blp_path(spec, grid, &d)
}

/// Filter for the terminal value given `ξ_t`, on the atoms of `ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState {
    pub t: f64,
    pub xi: Vec<f64>,
    /// Atom locations of `R_1`.
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
    /// `E(ξ^{(i)}_1 | ξ_t)`.
    pub means: Vec<f64>,
}

impl PosteriorState {
    /// The terminal vector standing for atom `k`: `ξ_t + p (r_k - R_t)`, the
    /// mean of `ξ_1` given `ξ_t` and `R_1 = r_k`.
    pub fn representative(&self, spec: &GlpSpec, k: usize) -> Vec<f64> {
        let rt: f64 = self.xi.iter().sum();
        self.xi
            .iter()
            .zip(spec.activity().shares())
            .map(|(x, p)| x + p * (self.atoms[k] - rt))
            .collect()
    }
}

/// Posterior weights `∝ ν(x) exp{Σ_i (x_i ξ^{(i)}_t - t x_i² / 2) / (σ² m_i (1 - t))}`
/// over the atoms, evaluated in log space at each atom's representative.
pub fn blp_posterior(spec: &GlpSpec, t: f64, xi: &[f64]) -> Result<PosteriorState> {
    const OP: &str = "Brownian filter";
    let sigma = brownian_sigma(spec, OP)?;
    if spec.law().continuous().is_some() {
        return Err(GlpError::unsupported(OP, "the filter needs a purely atomic law"));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(GlpError::Horizon { op: OP, t, range: "[0, 1)" });
    }
    if xi.len() != spec.n() {
        return Err(GlpError::domain(OP, "state has the wrong dimension"));
    }
    let m = spec.activity().m();
    let mut state = PosteriorState {
        t,
        xi: xi.to_vec(),
        atoms: spec.law().atoms().iter().map(|a| a.location).collect(),
        weights: Vec::new(),
        means: Vec::new(),
    };
    let logs: Vec<f64> = spec
        .law()
        .atoms()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let x = state.representative(spec, k);
            let q: f64 = (0..spec.n())
                .map(|i| (x[i] * xi[i] - t * x[i] * x[i] / 2.0) / (sigma * sigma * m[i] * (1.0 - t)))
                .sum();
            a.mass.ln() + q
        })
        .collect();
    let norm = log_sum_exp(logs.iter().copied());
    state.weights = logs.iter().map(|l| (l - norm).exp()).collect();
    let mut means = vec![0.0; spec.n()];
    for k in 0..state.atoms.len() {
        for (mi, x) in means.iter_mut().zip(state.representative(spec, k)) {
            *mi += state.weights[k] * x;
        }
    }
    state.means = means;
    Ok(state)
}

/// `σ^{(i)}_t = (x_i - E(ξ^{(i)}_1 | ξ_t)) / (σ² m_i (1 - t))` for atom `k`.
pub fn sigma_weights(state: &PosteriorState, spec: &GlpSpec, k: usize) -> Result<Vec<f64>> {
    let sigma = brownian_sigma(spec, "volatility weights")?;
    if !(state.t < 1.0) {
        return Err(GlpError::Horizon {
            op: "volatility weights",
            t: state.t,
            range: "[0, 1)",
        });
    }
    if k >= state.atoms.len() {
        return Err(GlpError::domain("volatility weights", format!("atom index {k} out of range")));
    }
    let m = spec.activity().m();
    Ok(state
        .representative(spec, k)
        .iter()
        .zip(&state.means)
        .zip(m)
        .map(|((x, e), mi)| (x - e) / (sigma * sigma * mi * (1.0 - state.t)))
        .collect())
}

/// Filter weights along a path, one state per grid time before 1.
pub fn blp_posterior_path(spec: &GlpSpec, path: &GlpPath) -> Result<Vec<PosteriorState>> {
    path.times()
        .iter()
        .enumerate()
        .take_while(|(_, &t)| t < 1.0)
        .map(|(k, &t)| blp_posterior(spec, t, path.at(k)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::GeneratingLaw;
    use crate::rng::stream;

    fn two_point(m: Vec<f64>) -> GlpSpec {
        let law = GeneratingLaw::from_pairs(&[(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        GlpSpec::new(DensityFamily::Brownian { sigma: 1.0 }, law, m).unwrap()
    }

    #[test]
    fn covariance_example() {
        assert_eq!(z_covariance(&[1.0, 1.0]), vec![vec![0.5, -0.5], vec![-0.5, 0.5]]);
    }

    #[test]
    fn z_sums_to_zero_and_path_ends_at_r1() {
        let spec = two_point(vec![1.0, 2.0, 3.0]);
        let grid = PathGrid::uniform(4, 1.0).unwrap();
        let mut rng = stream(4, 4, 4);
        for _ in 0..100 {
            let d = sample_blp_decomposition(&spec, &grid, &mut rng).unwrap();
            assert!(d.z.iter().sum::<f64>().abs() < 1e-12);
            assert!(d.bridges.iter().all(|b| b[0] == 0.0 && b[4] == 0.0));
            let p = assemble_blp_path(&spec, &grid, &d).unwrap();
            assert!((p.r()[4] - d.r1).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_other_families() {
        let spec = GlpSpec::new(DensityFamily::Poisson, GeneratingLaw::dirac(2.0), vec![1.0]).unwrap();
        let mut rng = stream(1, 1, 1);
        assert!(sample_blp_anticipative(&spec, &PathGrid::uniform(2, 1.0).unwrap(), &mut rng).is_err());
    }

    #[test]
    fn posterior_matches_sum_process_law() {
        let spec = two_point(vec![1.0, 3.0]);
        let xi = [0.4, -1.1];
        let st = blp_posterior(&spec, 0.6, &xi).unwrap();
        let want = spec.theta().posterior(0.6, xi.iter().sum()).unwrap();
        for (loc, w) in st.atoms.iter().zip(&st.weights) {
            assert!((w - want.atom_mass(*loc)).abs() < 1e-12);
        }
        assert_eq!(blp_posterior(&spec, 0.0, &[0.0, 0.0]).unwrap().weights, vec![0.5, 0.5]);
    }

    #[test]
    fn sigma_weights_center_and_sign() {
        let spec = two_point(vec![1.0, 1.0]);
        let st = blp_posterior(&spec, 0.5, &[0.2, 0.1]).unwrap();
        let s0 = sigma_weights(&st, &spec, 0).unwrap();
        let s1 = sigma_weights(&st, &spec, 1).unwrap();
        for i in 0..2 {
            assert!((st.weights[0] * s0[i] + st.weights[1] * s1[i]).abs() < 1e-12);
            assert!(s1[i] > 0.0);
        }
        let dirac = GlpSpec::new(DensityFamily::Brownian { sigma: 1.0 }, GeneratingLaw::dirac(1.0), vec![1.0, 1.0]).unwrap();
        let st = blp_posterior(&dirac, 0.5, &[0.2, 0.1]).unwrap();
        assert_eq!(st.weights, vec![1.0]);
        assert!(sigma_weights(&st, &dirac, 0).unwrap().iter().all(|v| v.abs() < 1e-15));
    }
}
