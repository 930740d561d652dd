//! Generalised Liouville processes.
//!
//! A master LRB `L` on `[0, Σm]` is cut into `n` consecutive blocks of
//! lengths `m_i`, and block `i` is rescaled to `[0, 1]`:
//! `ξ^{(i)}_t = L(u_{i-1} + t m_i) - L(u_{i-1})` with `u_i = m_1 + … + m_i`.

mod consistency;
mod laws;
mod sampling;
mod semimartingale;

pub use consistency::{consistency_experiment, strong_failure_regression, weak_consistency_test, ConsistencyDesign};
pub use laws::{
    conditional_generating_law, conditional_mean_coords, conditional_mean_r, fully_conditioned_marginal_cdf,
    fully_conditioned_marginal_density, glp_transition_density, marginal_transition_cdf, marginal_transition_density,
    r_process_laws, terminal_transition_law, transition_mass, MassQuery, RProcessLaws, TerminalLaw,
};
pub use sampling::{sample_glp_markov, sample_glp_master, sample_terminal, Sampler};
pub use semimartingale::{
    harness_statistic, harness_statistic_values, martingale_residual, martingale_residual_coords, rn_density,
    z_martingale, MIN_PER_BIN,
};

use serde::{Deserialize, Serialize};

use crate::error::{GlpError, Result};
use crate::kernels::DensityFamily;
use crate::measures::{GeneratingLaw, Theta, DEFAULT_EPS_HORIZON};

/// Block lengths `m` and their partial sums `u_0 = 0 < u_1 < … < u_n = Σm`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityVector {
    m: Vec<f64>,
    u: Vec<f64>,
}

impl ActivityVector {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.is_empty() {
            return Err(GlpError::InvalidSpec("activity vector is empty".into()));
        }
        if let Some(bad) = m.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(GlpError::InvalidSpec(format!("activity parameters must be positive, got {bad}")));
        }
        let mut u = Vec::with_capacity(m.len() + 1);
        u.push(0.0);
        for &mi in &m {
            u.push(u[u.len() - 1] + mi);
        }
        Ok(ActivityVector { m, u })
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    /// Partial sums, starting from `u_0 = 0`.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn total(&self) -> f64 {
        self.u[self.m.len()]
    }

    /// Shares `p_i = m_i / Σm`.
    pub fn shares(&self) -> Vec<f64> {
        let t = self.total();
        self.m.iter().map(|m| m / t).collect()
    }
}

/// A GLP: density family, law of `R_1`, and activity vector.
#[derive(Debug, Clone)]
pub struct GlpSpec {
    activity: ActivityVector,
    theta: Theta,
}

impl GlpSpec {
    pub fn new(family: DensityFamily, law: GeneratingLaw, m: Vec<f64>) -> Result<Self> {
        let activity = ActivityVector::new(m)?;
        let theta = Theta::new(family, law, activity.total())?;
        Ok(GlpSpec { activity, theta })
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(GlpError::InvalidSpec(format!("horizon guard must be in (0, 0.5), got {eps}")));
        }
        self.theta = self.theta.with_eps(eps);
        Ok(self)
    }

    pub fn family(&self) -> &DensityFamily {
        self.theta.family()
    }

    pub fn law(&self) -> &GeneratingLaw {
        self.theta.law()
    }

    pub fn activity(&self) -> &ActivityVector {
        &self.activity
    }

    pub fn n(&self) -> usize {
        self.activity.len()
    }

    pub fn total_activity(&self) -> f64 {
        self.activity.total()
    }

    pub fn eps(&self) -> f64 {
        self.theta.eps()
    }

    /// `θ_t`, `Θ_t` on horizon `Σm`.
    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    /// `τ(t) = 1 - m_n (1 - t) / Σm`.
    pub fn tau(&self, t: f64) -> f64 {
        1.0 - self.activity.m[self.n() - 1] * (1.0 - t) / self.total_activity()
    }

    pub(crate) fn require_integrable(&self, op: &'static str) -> Result<()> {
        if self.family().is_integrable() {
            Ok(())
        } else {
            Err(GlpError::Integrability {
                op,
                detail: format!("{:?} has no finite mean", self.family()),
            })
        }
    }

    pub fn to_config(&self) -> Result<SpecConfig> {
        Ok(SpecConfig {
            family: *self.family(),
            m: self.activity.m.clone(),
            eps: Some(self.eps()),
            law: self.law().to_config()?,
        })
    }

    pub fn from_config(cfg: &SpecConfig) -> Result<Self> {
        let spec = GlpSpec::new(cfg.family, GeneratingLaw::from_config(&cfg.law)?, cfg.m.clone())?;
        spec.with_eps(cfg.eps.unwrap_or(DEFAULT_EPS_HORIZON))
    }
}

impl PartialEq for GlpSpec {
    fn eq(&self, other: &Self) -> bool {
        self.activity == other.activity
            && self.family() == other.family()
            && self.law() == other.law()
            && self.eps() == other.eps()
    }
}

/// Serialisable form of a [`GlpSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub family: DensityFamily,
    pub m: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub law: crate::measures::LawConfig,
}

/// Strictly increasing observation times in `[0, 1]` starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid(Vec<f64>);

impl PathGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(GlpError::InvalidGrid("the first grid time must be 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GlpError::InvalidGrid("grid times must be strictly increasing".into()));
        }
        if times[times.len() - 1] > 1.0 {
            return Err(GlpError::InvalidGrid("grid times must not exceed 1".into()));
        }
        Ok(PathGrid(times))
    }

    /// `steps + 1` equally spaced times on `[0, end]`.
    pub fn uniform(steps: usize, end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(GlpError::InvalidGrid("a uniform grid needs at least one step".into()));
        }
        Self::new((0..=steps).map(|k| end * k as f64 / steps as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of a grid time, compared exactly.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.0.iter().position(|&s| s == t)
    }
}

/// An `n`-coordinate path observed on a grid, with `R_t = Σ_i ξ^{(i)}_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlpPath {
    grid: PathGrid,
    /// `values[k][i]` is coordinate `i` at grid time `k`.
    values: Vec<Vec<f64>>,
    sums: Vec<f64>,
}

impl GlpPath {
    /// Builds a path from per-time coordinate rows; `R` is recomputed.
    pub fn new(grid: PathGrid, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GlpError::InvalidGrid(format!(
                "{} rows for {} grid times",
                values.len(),
                grid.len()
            )));
        }
        let n = values.first().map_or(0, |v| v.len());
        if n == 0 || values.iter().any(|v| v.len() != n) {
            return Err(GlpError::InvalidGrid("rows must have equal, nonzero length".into()));
        }
        let sums = values.iter().map(|v| v.iter().sum()).collect();
        Ok(GlpPath { grid, values, sums })
    }

    pub fn grid(&self) -> &PathGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn n(&self) -> usize {
        self.values[0].len()
    }

    /// Coordinates at grid index `k`.
    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Trajectory of coordinate `i`.
    pub fn coord(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[i]).collect()
    }

    /// Trajectory of `R`.
    pub fn r(&self) -> &[f64] {
        &self.sums
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activity_partial_sums() {
        let a = ActivityVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.u(), &[0.0, 1.0, 3.0, 6.0]);
        assert_eq!(a.total(), 6.0);
        assert!(ActivityVector::new(vec![1.0, 0.0]).is_err());
        assert!(ActivityVector::new(vec![]).is_err());
    }

    #[test]
    fn tau_example() {
        let spec = GlpSpec::new(DensityFamily::Brownian { sigma: 1.0 }, GeneratingLaw::dirac(0.0), vec![1.0, 1.0]).unwrap();
        assert_eq!(spec.tau(0.5), 0.75);
        assert_eq!(spec.tau(1.0), 1.0);
    }

    #[test]
    fn grid_validation() {
        assert!(PathGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(PathGrid::new(vec![0.1, 0.5]).is_err());
        assert!(PathGrid::new(vec![0.0, 1.5]).is_err());
        assert_eq!(PathGrid::uniform(4, 1.0).unwrap().times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn path_sum_is_exact() {
        let g = PathGrid::new(vec![0.0, 1.0]).unwrap();
        let p = GlpPath::new(g, vec![vec![0.0, 0.0], vec![0.1, 0.2]]).unwrap();
        assert_eq!(p.r()[1], 0.1 + 0.2);
    }

    #[test]
    fn spec_config_round_trip() {
        let law = GeneratingLaw::from_pairs(&[(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        let spec = GlpSpec::new(DensityFamily::Brownian { sigma: 1.5 }, law, vec![1.0, 2.0]).unwrap();
        let text = toml::to_string(&spec.to_config().unwrap()).unwrap();
        let back = GlpSpec::from_config(&toml::from_str(&text).unwrap()).unwrap();
        assert_eq!(spec, back);
    }
}
