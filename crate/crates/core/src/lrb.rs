//! One-dimensional Lévy random bridges.
//!
//! An LRB on `[0, T]` is the Lévy process conditioned to have terminal law
//! `ν` at `T`. Its transition density from `y` at `s` to `x` at `t` is
//! `ϑ_t(ℝ; x) / ϑ_s(ℝ; y) · f_{t-s}(x - y)` with
//! `ϑ_t(dz; y) = ν(dz) f_{T-t}(z - y) / f_T(z)`.

use rand::Rng;

use crate::error::{GlpError, Result};
use crate::kernels::{bridge_increment_cdf, sample_bridge_path, BridgeEndpoint, DensityFamily, StateRange};
use crate::measures::{GeneratingLaw, StateSet, Theta};

/// Family, terminal law and horizon of an LRB.
#[derive(Debug, Clone)]
pub struct LrbSpec {
    theta: Theta,
}

impl LrbSpec {
    pub fn new(family: DensityFamily, law: GeneratingLaw, horizon: f64) -> Result<Self> {
        Ok(LrbSpec {
            theta: Theta::new(family, law, horizon)?,
        })
    }

    pub fn family(&self) -> &DensityFamily {
        self.theta.family()
    }

    pub fn law(&self) -> &GeneratingLaw {
        self.theta.law()
    }

    pub fn horizon(&self) -> f64 {
        self.theta.horizon()
    }

    /// `ϑ_t(B; y)`.
    pub fn vartheta(&self, t: f64, y: f64, set: &StateSet) -> Result<f64> {
        self.theta.theta(self.frac("vartheta", t)?, y, set)
    }

    /// `ln ϑ_t(ℝ; y)`.
    pub fn log_vartheta_total(&self, t: f64, y: f64) -> Result<f64> {
        self.theta.log_big_theta(self.frac("vartheta", t)?, y)
    }

    fn frac(&self, op: &'static str, t: f64) -> Result<f64> {
        let h = self.horizon();
        if !(0.0..h).contains(&t) {
            return Err(GlpError::Horizon { op, t, range: "[0, T)" });
        }
        Ok(t / h)
    }

    fn check_times(&self, s: f64, t: f64) -> Result<()> {
        if !(0.0 <= s && s < t && t < self.horizon()) {
            return Err(GlpError::Horizon {
                op: "LRB transition density",
                t,
                range: "0 <= s < t < T",
            });
        }
        Ok(())
    }

    fn log_norm(&self, s: f64, y: f64) -> Result<f64> {
        let l = self.log_vartheta_total(s, y)?;
        if l == f64::NEG_INFINITY || l.is_nan() {
            return Err(GlpError::null_event(
                "LRB transition density",
                format!("state {y} at time {s} is unreachable"),
            ));
        }
        Ok(l)
    }

    /// Transition density from `y` at `s` to `x` at `t`.
    pub fn transition_density(&self, s: f64, y: f64, t: f64, x: f64) -> Result<f64> {
        self.check_times(s, t)?;
        let fam = self.family();
        if !fam.in_support(x) {
            return Err(GlpError::domain(
                "LRB transition density",
                format!("state {x} is outside the {:?} support", fam.support()),
            ));
        }
        let ln = self.log_norm(s, y)?;
        Ok((self.log_vartheta_total(t, x)? + fam.log_density(t - s, x - y) - ln).exp())
    }

    /// CDF at `x` of the state at `t` given `y` at `s`.
    pub fn transition_cdf(&self, s: f64, y: f64, t: f64, x: f64) -> Result<f64> {
        self.check_times(s, t)?;
        let post = self.terminal_law(s, y)?;
        let (a, b) = (t - s, self.horizon() - t);
        let fam = *self.family();
        let atoms: f64 = post
            .atoms()
            .iter()
            .map(|at| Ok(at.mass * bridge_increment_cdf(&fam, a, b, at.location - y, x - y)?))
            .sum::<Result<f64>>()?;
        let cont = match post.continuous() {
            None => 0.0,
            Some(c) => c.integrate(|p| bridge_increment_cdf(&fam, a, b, p.x - y, x - y).unwrap_or(f64::NAN))?,
        };
        Ok((atoms + cont).clamp(0.0, 1.0))
    }

    /// Range of states reachable at `t` from `y` at `s`.
    pub fn transition_range(&self, s: f64, y: f64, t: f64) -> Result<StateRange> {
        let h = self.horizon();
        Ok(self.theta.increment_range(s / h, y, t / h).shifted(y))
    }

    /// Conditional law of `L_T` given `L_s = y`.
    pub fn terminal_law(&self, s: f64, y: f64) -> Result<GeneratingLaw> {
        let f = self.frac("LRB terminal law", s)?;
        if f > 0.0 {
            self.log_norm(s, y)?;
        }
        self.theta.posterior(f, y)
    }

    /// Exact sample at the `grid` times: draw `z ~ ν`, then the bridge to `z`.
    pub fn sample<R: Rng + ?Sized>(&self, grid: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let z = self.law().sample(rng)?;
        let end = BridgeEndpoint::new(self.family(), self.horizon(), z)?;
        sample_bridge_path(self.family(), &end, grid, rng)
    }
}

pub fn lrb_transition_density(spec: &LrbSpec, s: f64, y: f64, t: f64, x: f64) -> Result<f64> {
    spec.transition_density(s, y, t, x)
}

pub fn lrb_terminal_law(spec: &LrbSpec, s: f64, y: f64) -> Result<GeneratingLaw> {
    spec.terminal_law(s, y)
}

pub fn sample_lrb<R: Rng + ?Sized>(spec: &LrbSpec, grid: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    spec.sample(grid, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::bridge_transition_density;

    const BM: DensityFamily = DensityFamily::Brownian { sigma: 1.0 };

    #[test]
    fn dirac_recovers_bridge() {
        let spec = LrbSpec::new(BM, GeneratingLaw::dirac(0.7), 2.0).unwrap();
        let end = BridgeEndpoint::new(&BM, 2.0, 0.7).unwrap();
        let a = spec.transition_density(0.3, 0.1, 1.2, -0.4).unwrap();
        let b = bridge_transition_density(&BM, 0.3, 1.2, &end, 0.1, -0.4).unwrap();
        assert!((a - b).abs() < 1e-13 * b);
    }

    #[test]
    fn terminal_law_bayes_odds() {
        let law = GeneratingLaw::from_pairs(&[(-1.0, 0.3), (2.0, 0.7)]).unwrap();
        let spec = LrbSpec::new(BM, law, 1.5).unwrap();
        let post = spec.terminal_law(0.6, 0.4).unwrap();
        let lik = |z: f64| BM.density(0.9, z - 0.4).unwrap() / BM.density(1.5, z).unwrap();
        let odds = post.atom_mass(2.0) / post.atom_mass(-1.0);
        assert!((odds - (0.7 / 0.3) * lik(2.0) / lik(-1.0)).abs() < 1e-12 * odds);
        assert_eq!(spec.terminal_law(0.0, 0.0).unwrap(), *spec.law());
    }

    #[test]
    fn unreachable_state() {
        let spec = LrbSpec::new(DensityFamily::Poisson, GeneratingLaw::dirac(2.0), 1.0).unwrap();
        assert!(matches!(
            spec.transition_density(0.5, 3.0, 0.7, 3.0),
            Err(GlpError::NullConditioning { .. })
        ));
    }

    #[test]
    fn cdf_matches_density_quadrature() {
        let law = GeneratingLaw::from_pairs(&[(-2.0, 0.5), (1.0, 0.5)]).unwrap();
        let spec = LrbSpec::new(BM, law, 1.0).unwrap();
        let range = spec.transition_range(0.2, 0.3, 0.6).unwrap();
        let f = |p: &crate::quad::Pt| spec.transition_density(0.2, 0.3, 0.6, p.x).unwrap();
        let q = range.integrate_below(f, 0.1).unwrap();
        let c = spec.transition_cdf(0.2, 0.3, 0.6, 0.1).unwrap();
        assert!((q - c).abs() < 1e-8, "{q} vs {c}");
    }
}
