//! Poisson Liouville processes.
//!
//! Coordinates are Poisson counts; given `R_1 = k` the terminal vector is
//! multinomial with cell probabilities `p_i = m_i / Σm`, and given its
//! terminal count each coordinate jumps at the order statistics of
//! independent uniforms.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{GlpError, Result};
use crate::glp::{conditional_mean_r, GlpSpec};
use crate::kernels::DensityFamily;
use crate::measures::GeneratingLaw;
use crate::quad::bisect;

/// A Poisson GLP with an integer-valued generating law.
#[derive(Debug, Clone, PartialEq)]
pub struct PlpSpec {
    glp: GlpSpec,
}

impl PlpSpec {
    pub fn new(law: GeneratingLaw, m: Vec<f64>) -> Result<Self> {
        law.require_integer_atoms("Poisson Liouville spec")?;
        Ok(PlpSpec {
            glp: GlpSpec::new(DensityFamily::Poisson, law, m)?,
        })
    }

    pub fn from_glp(glp: GlpSpec) -> Result<Self> {
        if *glp.family() != DensityFamily::Poisson {
            return Err(GlpError::unsupported("Poisson Liouville spec", "the family must be Poisson"));
        }
        Self::new(glp.law().clone(), glp.activity().m().to_vec())
    }

    pub fn glp(&self) -> &GlpSpec {
        &self.glp
    }

    pub fn n(&self) -> usize {
        self.glp.n()
    }

    /// `p_i = m_i / Σm`.
    pub fn shares(&self) -> Vec<f64> {
        self.glp.activity().shares()
    }

    /// `G_ν(z) = Σ_k A(k) z^k`.
    pub fn pgf(&self, z: f64) -> Result<f64> {
        self.glp.law().pgf(z)
    }
}

fn ln_factorial(k: u64) -> f64 {
    statrs::function::factorial::ln_factorial(k)
}

/// `P(ξ_1 = x) = A(Σx) (Σx)! Π_i p_i^{x_i} / x_i!`.
pub fn plp_terminal_pmf(spec: &PlpSpec, x: &[i64]) -> Result<f64> {
    if x.len() != spec.n() {
        return Err(GlpError::domain("terminal pmf", "state has the wrong dimension"));
    }
    if let Some(v) = x.iter().find(|v| **v < 0) {
        return Err(GlpError::domain("terminal pmf", format!("counts must be nonnegative, got {v}")));
    }
    let total: i64 = x.iter().sum();
    let a = spec.glp.law().integer_mass(total as u64);
    if a == 0.0 {
        return Ok(0.0);
    }
    let lp: f64 = x
        .iter()
        .zip(spec.shares())
        .map(|(&xi, p)| xi as f64 * p.ln() - ln_factorial(xi as u64))
        .sum();
    Ok((a.ln() + ln_factorial(total as u64) + lp).exp())
}

/// `λ^R_t = (E(R_1 | ξ_t) - R_t) / (1 - t)`.
pub fn intensity_r(spec: &PlpSpec, t: f64, x: &[f64]) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(GlpError::Horizon {
            op: "intensity",
            t,
            range: "[0, 1)",
        });
    }
    let r: f64 = x.iter().sum();
    Ok(((conditional_mean_r(&spec.glp, t, x, 1.0)? - r) / (1.0 - t)).max(0.0))
}

/// `λ^{(i)}_t = p_i λ^R_t`, for all coordinates.
pub fn intensity_coordinates(spec: &PlpSpec, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    let lr = intensity_r(spec, t, x)?;
    Ok(spec.shares().iter().map(|p| p * lr).collect())
}

/// `λ^{(i)}_t` for one coordinate.
pub fn intensity_coordinate(spec: &PlpSpec, i: usize, t: f64, x: &[f64]) -> Result<f64> {
    if i >= spec.n() {
        return Err(GlpError::domain("intensity", format!("coordinate {i} out of range")));
    }
    Ok(intensity_coordinates(spec, t, x)?[i])
}

fn check_unit(op: &'static str, s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(GlpError::domain(op, format!("time {s} is outside [0, 1]")));
    }
    Ok(())
}

/// Survival functions of the first-jump times `T^{(i)}`.
pub struct SurvivalFunctions<'a> {
    spec: &'a PlpSpec,
}

pub fn survival_functions(spec: &PlpSpec) -> SurvivalFunctions<'_> {
    SurvivalFunctions { spec }
}

impl SurvivalFunctions<'_> {
    /// `P(T^{(i)} > s) = G_ν(1 - s p_i)`.
    pub fn marginal(&self, i: usize, s: f64) -> Result<f64> {
        check_unit("survival function", s)?;
        let p = self.spec.shares();
        let pi = *p
            .get(i)
            .ok_or_else(|| GlpError::domain("survival function", format!("coordinate {i} out of range")))?;
        self.spec.pgf(1.0 - s * pi)
    }

    /// `P(T^{(1)} > s_1, …, T^{(n)} > s_n) = G_ν(1 - Σ p_i s_i)`.
    pub fn joint(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.spec.n() {
            return Err(GlpError::domain("survival function", "wrong number of times"));
        }
        for &v in s {
            check_unit("survival function", v)?;
        }
        let arg: f64 = s.iter().zip(self.spec.shares()).map(|(v, p)| v * p).sum();
        self.spec.pgf((1.0 - arg).max(0.0))
    }

    /// `P(T^{(i)} = ∞) = G_ν(1 - p_i)`: coordinate `i` never jumps.
    pub fn never(&self, i: usize) -> Result<f64> {
        self.marginal(i, 1.0)
    }

    /// `P(T^{(i)} = ∞ for all i) = A(0)`.
    pub fn none_jump(&self) -> f64 {
        self.spec.glp.law().integer_mass(0)
    }
}

/// `ψ(x) = G_ν(1 - x)` on `[0, 1]`.
pub fn psi(spec: &PlpSpec, x: f64) -> Result<f64> {
    check_unit("psi", x)?;
    spec.pgf(1.0 - x)
}

/// Inverse of the nonincreasing `ψ` on `[ψ(1), 1]`, by bisection to `1e-12`.
pub fn psi_inverse(spec: &PlpSpec, u: f64) -> Result<f64> {
    let lo = psi(spec, 1.0)?;
    if !(lo <= u && u <= 1.0) {
        return Err(GlpError::domain("psi inverse", format!("{u} is outside [{lo}, 1]")));
    }
    if u == 1.0 {
        return Ok(0.0);
    }
    bisect(|x| psi(spec, x).unwrap_or(f64::NAN) - u, 0.0, 1.0, 1e-12)
}

/// `ψ(Σ_i ψ^{-1}(u_i))`, for `u_i ∈ [ψ(p_i), 1]`. At `u_i = ψ(p_i s_i)` this
/// is the joint survival function.
pub fn psi_structure(spec: &PlpSpec, u: &[f64]) -> Result<f64> {
    if u.len() != spec.n() {
        return Err(GlpError::domain("psi structure", "wrong number of arguments"));
    }
    let mut acc = 0.0;
    for (&ui, pi) in u.iter().zip(spec.shares()) {
        let floor = psi(spec, pi)?;
        if !(floor <= ui && ui <= 1.0) {
            return Err(GlpError::domain(
                "psi structure",
                format!("{ui} is outside the admissible range [{floor}, 1]"),
            ));
        }
        acc += psi_inverse(spec, ui)?;
    }
    psi(spec, acc.min(1.0))
}

/// All jump times of one path, per coordinate and sorted. Given the
/// multinomial terminal counts, each coordinate's jumps are the order
/// statistics of its count of independent uniforms.
pub fn sample_plp_jumps<R: Rng + ?Sized>(spec: &PlpSpec, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let total = spec.glp.law().sample(rng)?.round() as u64;
    let p = spec.shares();
    let mut left = total;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(spec.n());
    for (i, pi) in p.iter().enumerate() {
        let k = if i + 1 == p.len() {
            left
        } else if left == 0 {
            0
        } else {
            let q = (pi / mass).clamp(0.0, 1.0);
            Binomial::new(left, q)
                .map_err(|e| GlpError::Numerical {
                    op: "jump sampler",
                    detail: e.to_string(),
                })?
                .sample(rng)
        };
        left -= k;
        mass -= pi;
        let mut times: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
        times.sort_by(f64::total_cmp);
        out.push(times);
    }
    Ok(out)
}

/// `T^{(i)}`: the first jump time, `None` (infinite) for no jumps.
pub fn first_jump_times(jumps: &[Vec<f64>]) -> Vec<Option<f64>> {
    jumps.iter().map(|j| j.first().copied()).collect()
}

/// Counts on a grid from jump times: `ξ^{(i)}_t = #{jumps <= t}`.
pub fn counts_at(jumps: &[Vec<f64>], t: f64) -> Vec<f64> {
    jumps.iter().map(|j| j.partition_point(|&s| s <= t) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn pinned_two() -> PlpSpec {
        PlpSpec::new(GeneratingLaw::dirac(2.0), vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn pmf_examples() {
        let s = pinned_two();
        assert!((plp_terminal_pmf(&s, &[1, 1]).unwrap() - 0.5).abs() < 1e-15);
        assert!((plp_terminal_pmf(&s, &[0, 2]).unwrap() - 0.25).abs() < 1e-15);
        assert!((plp_terminal_pmf(&s, &[2, 0]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(plp_terminal_pmf(&s, &[2, 2]).unwrap(), 0.0);
        assert!(plp_terminal_pmf(&s, &[-1, 3]).is_err());
    }

    #[test]
    fn pmf_sums_to_one() {
        let law = GeneratingLaw::geometric_truncated(0.5, 20).unwrap();
        let s = PlpSpec::new(law, vec![1.0, 2.0]).unwrap();
        let mut total = 0.0;
        for a in 0..=20i64 {
            for b in 0..=(20 - a) {
                total += plp_terminal_pmf(&s, &[a, b]).unwrap();
            }
        }
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn intensity_examples() {
        let s = PlpSpec::new(GeneratingLaw::dirac(3.0), vec![1.0, 1.0]).unwrap();
        assert!((intensity_r(&s, 0.0, &[0.0, 0.0]).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(intensity_r(&s, 0.5, &[1.0, 2.0]).unwrap(), 0.0);
        let l = intensity_coordinates(&s, 0.3, &[1.0, 0.0]).unwrap();
        assert_eq!(l[0], l[1]);
        assert_eq!(l[0] + l[1], intensity_r(&s, 0.3, &[1.0, 0.0]).unwrap());
        assert!(intensity_r(&s, 1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn survival_examples() {
        let s = pinned_two();
        let sf = survival_functions(&s);
        assert!((sf.marginal(0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(sf.never(0).unwrap(), sf.marginal(0, 1.0).unwrap());
        assert_eq!(sf.marginal(1, 0.0).unwrap(), 1.0);
        assert_eq!(sf.none_jump(), 0.0);
        assert!(sf.marginal(0, 1.5).is_err());
    }

    #[test]
    fn psi_examples() {
        let s = pinned_two();
        assert!((psi_inverse(&s, 0.25).unwrap() - 0.5).abs() < 1e-11);
        assert!(psi_structure(&s, &[0.25, 0.25]).unwrap().abs() < 1e-11);
        assert!(psi_structure(&s, &[0.1, 0.5]).is_err());
        let sf = survival_functions(&s);
        let (s1, s2) = (0.3, 0.8);
        let u = [psi(&s, 0.5 * s1).unwrap(), psi(&s, 0.5 * s2).unwrap()];
        let want = sf.joint(&[s1, s2]).unwrap();
        assert!((psi_structure(&s, &u).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn jumps_match_terminal_counts() {
        let s = pinned_two();
        let mut rng = stream(6, 6, 6);
        for _ in 0..200 {
            let j = sample_plp_jumps(&s, &mut rng).unwrap();
            assert_eq!(j[0].len() + j[1].len(), 2);
            assert!(j.iter().flatten().all(|&t| t > 0.0 && t <= 1.0));
            let first = first_jump_times(&j);
            assert_eq!(first[0].is_none(), j[0].is_empty());
            assert_eq!(counts_at(&j, 1.0).iter().sum::<f64>(), 2.0);
        }
    }
}
