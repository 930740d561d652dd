//! Convolution families of densities and the Lévy bridges built on them.
//!
//! A [`DensityFamily`] is a one-parameter family `{f_t}` with
//! `f_a * f_b = f_{a+b}`: the marginal densities of a Lévy process. Bridges
//! of that process are Doob h-transforms with `h_t(x) = f_{T-t}(z - x)`.
//! All kernel arithmetic is done on log densities.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{GlpError, Result};
use crate::quad::{self, Layout, Pt, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Support {
    RealLine,
    NonNegativeReals,
    NonNegativeIntegers,
}

/// The density family of the driving Lévy process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityFamily {
    /// Brownian motion with volatility `sigma`: `f_t = N(0, sigma^2 t)`.
    Brownian { sigma: f64 },
    /// Gamma process with unit activity: `f_t` is the Gamma(t, 1) density.
    Gamma,
    /// Unit-rate Poisson process: `f_t` is the Poisson(t) mass function.
    Poisson,
    /// Stable subordinator of index 1/2:
    /// `f_t(x) = c t / (2 sqrt(pi)) x^{-3/2} exp(-c^2 t^2 / (4x))`.
    StableHalf { c: f64 },
}

impl DensityFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DensityFamily::Brownian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                GlpError::InvalidSpec(format!("Brownian volatility must be positive, got {sigma}")),
            ),
            DensityFamily::StableHalf { c } if !(c > 0.0 && c.is_finite()) => Err(
                GlpError::InvalidSpec(format!("stable scale must be positive, got {c}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn support(&self) -> Support {
        match self {
            DensityFamily::Brownian { .. } => Support::RealLine,
            DensityFamily::Gamma | DensityFamily::StableHalf { .. } => Support::NonNegativeReals,
            DensityFamily::Poisson => Support::NonNegativeIntegers,
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, DensityFamily::Poisson)
    }

    /// Nondecreasing paths (gamma, Poisson, 1/2-stable).
    pub fn is_subordinator(&self) -> bool {
        !matches!(self, DensityFamily::Brownian { .. })
    }

    /// Whether `f_t` has a finite first moment.
    pub fn is_integrable(&self) -> bool {
        !matches!(self, DensityFamily::StableHalf { .. })
    }

    pub fn in_support(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match self.support() {
            Support::RealLine => true,
            Support::NonNegativeReals => x >= 0.0,
            Support::NonNegativeIntegers => x >= 0.0 && x.fract() == 0.0,
        }
    }

    /// `ln f_t(x)` without argument checks: `-inf` off the support, and
    /// `+inf` where the density itself is unbounded (gamma at the origin
    /// with shape below one).
    pub fn log_density(&self, t: f64, x: f64) -> f64 {
        match *self {
            DensityFamily::Brownian { sigma } => {
                let v = sigma * sigma * t;
                -0.5 * x * x / v - 0.5 * (2.0 * PI * v).ln()
            }
            DensityFamily::Gamma => {
                if x > 0.0 {
                    (t - 1.0) * x.ln() - x - ln_gamma(t)
                } else if x == 0.0 {
                    if t < 1.0 {
                        f64::INFINITY
                    } else if t == 1.0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    f64::NEG_INFINITY
                }
            }
            DensityFamily::Poisson => {
                if x >= 0.0 && x.fract() == 0.0 {
                    if x == 0.0 {
                        -t
                    } else {
                        x * t.ln() - t - ln_gamma(x + 1.0)
                    }
                } else {
                    f64::NEG_INFINITY
                }
            }
            DensityFamily::StableHalf { c } => {
                if x > 0.0 {
                    (c * t / (2.0 * PI.sqrt())).ln() - 1.5 * x.ln() - c * c * t * t / (4.0 * x)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `f_t(x)`; the mass function for the lattice family.
    pub fn density(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(GlpError::domain("density", format!("time must be positive, got {t}")));
        }
        if !self.in_support(x) {
            return Err(GlpError::domain(
                "density",
                format!("state {x} is outside the {:?} support", self.support()),
            ));
        }
        Ok(self.log_density(t, x).exp())
    }

    /// Mean of `f_t`, if finite.
    pub fn mean(&self, t: f64) -> Option<f64> {
        match self {
            DensityFamily::Brownian { .. } => Some(0.0),
            DensityFamily::Gamma | DensityFamily::Poisson => Some(t),
            DensityFamily::StableHalf { .. } => None,
        }
    }

    /// A length scale for `f_t`, used to lay out integration panels.
    pub fn scale(&self, t: f64) -> f64 {
        match *self {
            DensityFamily::Brownian { sigma } => sigma * t.sqrt(),
            DensityFamily::Gamma | DensityFamily::Poisson => t.sqrt().max(t),
            DensityFamily::StableHalf { c } => c * c * t * t / 2.0,
        }
    }

    /// Draws an increment of the free Lévy process over a time span `t`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        match *self {
            DensityFamily::Brownian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * t.sqrt() * z
            }
            DensityFamily::Gamma => log_gamma_variate(t, rng).exp(),
            DensityFamily::Poisson => Poisson::new(t).map(|d| d.sample(rng)).unwrap_or(0.0),
            DensityFamily::StableHalf { c } => {
                // Lévy law with scale c^2 t^2 / 2 is scale / Z^2.
                let z: f64 = rng.sample(StandardNormal);
                0.5 * c * c * t * t / (z * z)
            }
        }
    }

    /// Panels for integrating a function of the state over the free density
    /// `f_t(. - from)`, used by the oracles and quadrature-backed checks.
    pub fn free_range(&self, t: f64, from: f64) -> StateRange {
        match *self {
            DensityFamily::Brownian { .. } => {
                let s = self.scale(t);
                StateRange::Line(gaussian_layout(from, s))
            }
            DensityFamily::Poisson => {
                let hi = (t + 12.0 * t.sqrt() + 40.0).ceil() as i64;
                StateRange::Lattice {
                    lo: from.round() as i64,
                    hi: from.round() as i64 + hi,
                }
            }
            DensityFamily::Gamma | DensityFamily::StableHalf { .. } => {
                let s = self.scale(t);
                StateRange::Line(
                    Layout {
                        breaks: vec![from, from + s, from + 10.0 * s],
                        left_tail: false,
                        right_tail: true,
                        rule: Rule::EndpointSingular,
                    }
                    .normalise(),
                )
            }
        }
    }
}

/// `ln` of a Gamma(shape, 1) variate, stable for tiny shapes.
pub fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        g.ln()
    } else {
        // G(a) = G(a + 1) U^{1/a}.
        let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        let u: f64 = 1.0 - rng.random::<f64>();
        g.ln() + u.ln() / shape
    }
}

/// A set of states to integrate or sum over.
#[derive(Debug, Clone, PartialEq)]
pub enum StateRange {
    /// Integers `lo..=hi`.
    Lattice { lo: i64, hi: i64 },
    /// Real panels.
    Line(Layout),
}

impl StateRange {
    /// Integral (or sum) of `f` over the range.
    pub fn integrate<F: Fn(&Pt) -> f64>(&self, f: F) -> Result<f64> {
        self.integrate_tol(f, quad::ABS_TOL)
    }

    pub fn integrate_tol<F: Fn(&Pt) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        match self {
            StateRange::Lattice { lo, hi } => {
                let (lo, hi) = (*lo as f64, *hi as f64);
                let mut k = lo;
                let mut acc = 0.0;
                while k <= hi {
                    acc += f(&Pt {
                        x: k,
                        lo,
                        hi,
                        da: k - lo,
                        db: hi - k,
                    });
                    k += 1.0;
                }
                Ok(acc)
            }
            StateRange::Line(layout) => layout.integrate(f, tol),
        }
    }

    /// `∫_{x ≤ y} f` over the range.
    pub fn integrate_below<F: Fn(&Pt) -> f64>(&self, f: F, y: f64) -> Result<f64> {
        match self {
            StateRange::Lattice { lo, hi } => {
                let top = (y.floor() as i64).min(*hi);
                if top < *lo {
                    return Ok(0.0);
                }
                StateRange::Lattice { lo: *lo, hi: top }.integrate(f)
            }
            StateRange::Line(layout) => {
                let first = layout.breaks.first().copied().unwrap_or(y);
                if !layout.left_tail && y <= first {
                    return Ok(0.0);
                }
                let mut l = layout.clone();
                l.breaks.push(y);
                l.clone().normalise().clip(f64::NEG_INFINITY, y).integrate(f, quad::ABS_TOL)
            }
        }
    }

    /// The range translated by `by` (rounded for the lattice).
    pub fn shifted(self, by: f64) -> StateRange {
        match self {
            StateRange::Lattice { lo, hi } => {
                let k = by.round() as i64;
                StateRange::Lattice { lo: lo + k, hi: hi + k }
            }
            StateRange::Line(mut l) => {
                for b in l.breaks.iter_mut() {
                    *b += by;
                }
                StateRange::Line(l)
            }
        }
    }

    /// Union of two ranges of the same kind.
    pub fn merge(self, other: StateRange) -> StateRange {
        match (self, other) {
            (StateRange::Lattice { lo: a, hi: b }, StateRange::Lattice { lo: c, hi: d }) => {
                StateRange::Lattice {
                    lo: a.min(c),
                    hi: b.max(d),
                }
            }
            (StateRange::Line(mut a), StateRange::Line(b)) => {
                a.left_tail |= b.left_tail;
                a.right_tail |= b.right_tail;
                if b.rule == Rule::EndpointSingular {
                    a.rule = Rule::EndpointSingular;
                }
                a.breaks.extend(b.breaks);
                StateRange::Line(a.normalise())
            }
            (a, _) => a,
        }
    }
}

/// Panels centred on `mean` with spacing `sd`, with infinite tails.
pub fn gaussian_layout(mean: f64, sd: f64) -> Layout {
    let breaks = (-8..=8).map(|k| mean + k as f64 * sd).collect();
    Layout {
        breaks,
        left_tail: true,
        right_tail: true,
        rule: Rule::Smooth,
    }
    .normalise()
}

/// The pin of a Lévy bridge: value `pin` at time `horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeEndpoint {
    horizon: f64,
    pin: f64,
}

impl BridgeEndpoint {
    /// Requires `0 < f_T(z) < ∞`.
    pub fn new(family: &DensityFamily, horizon: f64, pin: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(GlpError::InvalidEndpoint(format!("horizon must be positive, got {horizon}")));
        }
        let lf = family.log_density(horizon, pin);
        if !lf.is_finite() {
            return Err(GlpError::InvalidEndpoint(format!(
                "f_T(z) must be positive and finite; T = {horizon}, z = {pin}"
            )));
        }
        Ok(BridgeEndpoint { horizon, pin })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn pin(&self) -> f64 {
        self.pin
    }
}

/// Transition density of the bridge from `y` at `s` to `x` at `t`:
/// `h_t(x) / h_s(y) · f_{t-s}(x - y)` with `h_t(x) = f_{T-t}(z - x)`.
pub fn bridge_transition_density(
    family: &DensityFamily,
    s: f64,
    t: f64,
    end: &BridgeEndpoint,
    y: f64,
    x: f64,
) -> Result<f64> {
    check_bridge_times(s, t, end)?;
    if !family.in_support(x) || !family.in_support(y) {
        return Err(GlpError::domain(
            "bridge transition density",
            format!("state {x} is outside the {:?} support", family.support()),
        ));
    }
    let log_hs = family.log_density(end.horizon - s, end.pin - y);
    if log_hs == f64::NEG_INFINITY {
        return Err(GlpError::null_event(
            "bridge transition density",
            format!("h_s(y) = 0 at s = {s}, y = {y}"),
        ));
    }
    Ok(bridge_log_density(family, s, t, end, y, x - y, end.pin - x).exp())
}

fn check_bridge_times(s: f64, t: f64, end: &BridgeEndpoint) -> Result<()> {
    if !(s >= 0.0 && s < t && t < end.horizon) {
        return Err(GlpError::Horizon {
            op: "bridge transition density",
            t,
            range: "0 <= s < t < T",
        });
    }
    Ok(())
}

/// Log bridge density given the increment `dx = x - y` and the remaining
/// distance `rest = z - x`, both supplied exactly by the caller.
pub(crate) fn bridge_log_density(
    family: &DensityFamily,
    s: f64,
    t: f64,
    end: &BridgeEndpoint,
    y: f64,
    dx: f64,
    rest: f64,
) -> f64 {
    family.log_density(t - s, dx) + family.log_density(end.horizon - t, rest)
        - family.log_density(end.horizon - s, end.pin - y)
}

/// Integration range for the bridge marginal at `t` started from `y` at `s`.
pub fn bridge_range(family: &DensityFamily, s: f64, t: f64, end: &BridgeEndpoint, y: f64) -> StateRange {
    let z = end.pin;
    match *family {
        DensityFamily::Brownian { sigma } => {
            let frac = (t - s) / (end.horizon - s);
            let mean = y + frac * (z - y);
            let sd = sigma * ((t - s) * (end.horizon - t) / (end.horizon - s)).sqrt();
            StateRange::Line(gaussian_layout(mean, sd))
        }
        DensityFamily::Poisson => StateRange::Lattice {
            lo: y.round() as i64,
            hi: z.round() as i64,
        },
        DensityFamily::Gamma | DensityFamily::StableHalf { .. } => {
            StateRange::Line(Layout::finite(y, z, Rule::EndpointSingular))
        }
    }
}

/// Integrates the bridge transition density over the state space.
pub fn bridge_total_mass(family: &DensityFamily, s: f64, t: f64, end: &BridgeEndpoint, y: f64) -> Result<f64> {
    check_bridge_times(s, t, end)?;
    bridge_range(family, s, t, end, y)
        .integrate(|p| bridge_log_density(family, s, t, end, y, p.offset_from(y), p.offset_to(end.pin)).exp())
}

/// Exact sample of the bridge at the `grid` times, started from 0 at time 0.
///
/// Brownian: sequential Gaussian conditioning. Poisson: multinomial
/// allocation of the `z` jumps with cell probabilities `Δt / T`. Gamma:
/// Dirichlet split of `z` with parameters `Δt`. 1/2-stable: sequential
/// numerical inversion of the one-step bridge law.
pub fn sample_bridge_path<R: Rng + ?Sized>(
    family: &DensityFamily,
    end: &BridgeEndpoint,
    grid: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    validate_bridge_grid(grid, end.horizon)?;
    let horizon = end.horizon;
    let z = end.pin;
    match *family {
        DensityFamily::Brownian { sigma } => {
            let mut out = Vec::with_capacity(grid.len());
            let (mut s, mut y) = (0.0, 0.0);
            for &t in grid {
                let x = if t == 0.0 {
                    0.0
                } else if t == horizon {
                    z
                } else {
                    let frac = (t - s) / (horizon - s);
                    let sd = sigma * ((t - s) * (horizon - t) / (horizon - s)).sqrt();
                    let n: f64 = rng.sample(StandardNormal);
                    y + frac * (z - y) + sd * n
                };
                out.push(x);
                s = t;
                y = x;
            }
            Ok(out)
        }
        DensityFamily::Poisson => {
            let mut left = z.round() as u64;
            let mut out = Vec::with_capacity(grid.len());
            let (mut s, mut acc) = (0.0, 0u64);
            for &t in grid {
                if t > s && left > 0 {
                    let p = ((t - s) / (horizon - s)).clamp(0.0, 1.0);
                    let k = Binomial::new(left, p)
                        .map_err(|e| GlpError::Numerical {
                            op: "poisson bridge",
                            detail: e.to_string(),
                        })?
                        .sample(rng);
                    left -= k;
                    acc += k;
                }
                out.push(acc as f64);
                s = t;
            }
            Ok(out)
        }
        DensityFamily::Gamma => {
            // Dirichlet over the grid cells plus the remainder up to T.
            let mut cells: Vec<f64> = Vec::with_capacity(grid.len() + 1);
            let mut prev = 0.0;
            for &t in grid {
                cells.push(t - prev);
                prev = t;
            }
            let rem = horizon - prev;
            let mut logs: Vec<f64> = cells
                .iter()
                .map(|&w| if w > 0.0 { log_gamma_variate(w, rng) } else { f64::NEG_INFINITY })
                .collect();
            logs.push(if rem > 0.0 { log_gamma_variate(rem, rng) } else { f64::NEG_INFINITY });
            let lse = quad::log_sum_exp(logs.iter().copied());
            let mut out = Vec::with_capacity(grid.len());
            let mut acc = 0.0;
            for (i, &t) in grid.iter().enumerate() {
                acc += z * (logs[i] - lse).exp();
                out.push(if t == horizon { z } else { acc.min(z) });
            }
            Ok(out)
        }
        DensityFamily::StableHalf { c } => {
            let mut out = Vec::with_capacity(grid.len());
            let (mut s, mut y) = (0.0, 0.0);
            for &t in grid {
                let x = if t == 0.0 {
                    0.0
                } else if t == horizon {
                    z
                } else {
                    y + sample_stable_bridge_increment(c, t - s, horizon - t, z - y, rng)?
                };
                out.push(x);
                s = t;
                y = x;
            }
            Ok(out)
        }
    }
}

/// CDF at `d` of the increment over a span `a` of a bridge that covers
/// `dist` over total time `a + b`: Gaussian for Brownian motion, binomial
/// for Poisson, scaled Beta(a, b) for gamma, numerical for 1/2-stable.
pub fn bridge_increment_cdf(family: &DensityFamily, a: f64, b: f64, dist: f64, d: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(GlpError::domain("bridge increment cdf", format!("spans must be positive, got {a}, {b}")));
    }
    let frac = a / (a + b);
    Ok(match *family {
        DensityFamily::Brownian { sigma } => {
            let mean = frac * dist;
            let sd = sigma * (a * b / (a + b)).sqrt();
            normal_cdf((d - mean) / sd)
        }
        DensityFamily::Poisson => {
            if d < 0.0 {
                0.0
            } else if d >= dist {
                1.0
            } else {
                let n = dist.round() as u64;
                let k = d.floor() as u64;
                statrs::distribution::DiscreteCDF::cdf(
                    &statrs::distribution::Binomial::new(frac, n).map_err(|e| GlpError::Numerical {
                        op: "bridge increment cdf",
                        detail: e.to_string(),
                    })?,
                    k,
                )
            }
        }
        DensityFamily::Gamma => {
            if d <= 0.0 {
                0.0
            } else if d >= dist {
                1.0
            } else {
                statrs::function::beta::beta_reg(a, b, d / dist)
            }
        }
        DensityFamily::StableHalf { .. } => {
            if d <= 0.0 {
                0.0
            } else if d >= dist {
                1.0
            } else {
                let norm = family.log_density(a + b, dist);
                let g = |p: &Pt| (family.log_density(a, p.offset_from(0.0)) + family.log_density(b, p.offset_to(dist)) - norm).exp();
                let lay = Layout {
                    breaks: vec![0.0, d],
                    left_tail: false,
                    right_tail: false,
                    rule: Rule::EndpointSingular,
                };
                lay.integrate(g, 1e-12)?.clamp(0.0, 1.0)
            }
        }
    })
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

fn validate_bridge_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(GlpError::InvalidGrid("grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(GlpError::InvalidGrid("grid times must be strictly increasing".into()));
    }
    if grid[0] < 0.0 || grid[grid.len() - 1] > horizon {
        return Err(GlpError::InvalidGrid(format!("grid must lie within [0, {horizon}]")));
    }
    Ok(())
}

/// Draws the increment over a span `a` of a 1/2-stable bridge that must
/// cover `dist` in total time `a + b`, by inverting the numerically
/// integrated conditional CDF.
fn sample_stable_bridge_increment<R: Rng + ?Sized>(c: f64, a: f64, b: f64, dist: f64, rng: &mut R) -> Result<f64> {
    let fam = DensityFamily::StableHalf { c };
    let norm = fam.log_density(a + b, dist);
    let g = move |p: &Pt| (fam.log_density(a, p.offset_from(0.0)) + fam.log_density(b, p.offset_to(dist)) - norm).exp();
    // Panels resolving the boundary layers near 0 and near `dist`, whose
    // widths are set by the modes c^2 a^2 / 6 and c^2 b^2 / 6.
    let ma = c * c * a * a / 6.0;
    let mb = c * c * b * b / 6.0;
    let mut breaks = vec![0.0, dist, 0.5 * dist];
    for k in [0.1, 1.0, 10.0, 100.0] {
        breaks.push(k * ma);
        breaks.push(dist - k * mb);
    }
    let layout = Layout {
        breaks,
        left_tail: false,
        right_tail: false,
        rule: Rule::Smooth,
    }
    .clip(0.0, dist);
    layout.quantile(&g, rng.random::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    const BM: DensityFamily = DensityFamily::Brownian { sigma: 1.0 };

    #[test]
    fn density_examples() {
        assert!((BM.density(1.0, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert!((DensityFamily::Poisson.density(2.0, 0.0).unwrap() - (-2f64).exp()).abs() < 1e-15);
        assert!((DensityFamily::Gamma.density(1.0, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let c = 1.3;
        let st = DensityFamily::StableHalf { c };
        let want = c * 0.7 / (2.0 * PI.sqrt()) * 2f64.powf(-1.5) * (-c * c * 0.49 / 8.0).exp();
        assert!((st.density(0.7, 2.0).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn density_errors() {
        assert!(BM.density(0.0, 0.0).is_err());
        assert!(BM.density(-1.0, 0.0).is_err());
        assert!(DensityFamily::Poisson.density(1.0, 0.5).is_err());
        assert!(DensityFamily::Gamma.density(1.0, -0.1).is_err());
    }

    #[test]
    fn endpoint_validation() {
        assert!(BridgeEndpoint::new(&DensityFamily::Gamma, 2.0, 0.0).is_err());
        assert!(BridgeEndpoint::new(&DensityFamily::Gamma, 0.5, 0.0).is_err());
        assert!(BridgeEndpoint::new(&DensityFamily::Poisson, 1.0, 1.5).is_err());
        assert!(BridgeEndpoint::new(&DensityFamily::Poisson, 1.0, 0.0).is_ok());
        assert!(BridgeEndpoint::new(&BM, 0.0, 1.0).is_err());
    }

    #[test]
    fn brownian_bridge_midpoint() {
        let end = BridgeEndpoint::new(&BM, 1.0, 0.0).unwrap();
        let v = bridge_transition_density(&BM, 0.0, 0.5, &end, 0.0, 0.0).unwrap();
        assert!((v - 1.0 / (2.0 * PI * 0.25).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn poisson_bridge_binomial() {
        let fam = DensityFamily::Poisson;
        let end = BridgeEndpoint::new(&fam, 1.0, 2.0).unwrap();
        let v = bridge_transition_density(&fam, 0.0, 0.5, &end, 0.0, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bridge_null_conditioning() {
        let fam = DensityFamily::Poisson;
        let end = BridgeEndpoint::new(&fam, 1.0, 2.0).unwrap();
        let e = bridge_transition_density(&fam, 0.2, 0.5, &end, 3.0, 3.0).unwrap_err();
        assert!(matches!(e, GlpError::NullConditioning { .. }));
        assert!(bridge_transition_density(&fam, 0.5, 0.5, &end, 0.0, 1.0).is_err());
    }

    #[test]
    fn bridge_paths_are_pinned() {
        let grid = [0.0, 0.3, 0.7, 1.0];
        for (i, fam) in [BM, DensityFamily::Gamma, DensityFamily::Poisson, DensityFamily::StableHalf { c: 1.0 }]
            .iter()
            .enumerate()
        {
            let z = if fam.is_lattice() { 3.0 } else { 1.7 };
            let end = BridgeEndpoint::new(fam, 1.0, z).unwrap();
            let mut rng = stream(1, 2, i as u64);
            for _ in 0..20 {
                let p = sample_bridge_path(fam, &end, &grid, &mut rng).unwrap();
                assert_eq!(p[0], 0.0);
                assert_eq!(p[3], z);
                if fam.is_subordinator() {
                    assert!(p.windows(2).all(|w| w[1] >= w[0]), "{p:?}");
                }
            }
        }
    }

    #[test]
    fn bridge_grid_errors() {
        let end = BridgeEndpoint::new(&BM, 1.0, 0.0).unwrap();
        let mut rng = stream(1, 2, 3);
        assert!(sample_bridge_path(&BM, &end, &[0.0, 0.5, 0.5], &mut rng).is_err());
        assert!(sample_bridge_path(&BM, &end, &[0.0, 1.5], &mut rng).is_err());
        assert!(sample_bridge_path(&BM, &end, &[], &mut rng).is_err());
    }

    #[test]
    fn poisson_bridge_multinomial_enumeration() {
        // z = 2 over cells of probability 1/2: P(0) = 1/4, P(1) = 1/2, P(2) = 1/4.
        let fam = DensityFamily::Poisson;
        let end = BridgeEndpoint::new(&fam, 1.0, 2.0).unwrap();
        let mut rng = stream(11, 0, 0);
        let n = 40_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let p = sample_bridge_path(&fam, &end, &[0.0, 0.5, 1.0], &mut rng).unwrap();
            counts[p[1] as usize] += 1;
        }
        for (k, want) in [0.25, 0.5, 0.25].iter().enumerate() {
            let f = counts[k] as f64 / n as f64;
            let se = (want * (1.0 - want) / n as f64).sqrt();
            assert!((f - want).abs() < 4.0 * se, "k={k} f={f}");
        }
    }

    #[test]
    fn gamma_bridge_dirichlet_moments() {
        // Increment over [0, u] of a gamma bridge pinned at 1 is Beta(u, 1-u).
        let u = 0.3;
        let end = BridgeEndpoint::new(&DensityFamily::Gamma, 1.0, 1.0).unwrap();
        let mut rng = stream(12, 0, 0);
        let n = 40_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_bridge_path(&DensityFamily::Gamma, &end, &[0.0, u, 1.0], &mut rng).unwrap()[1])
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        // Beta(u, 1-u): mean u, second moment u(u+1)/2.
        let var = u * (1.0 - u) / 2.0;
        assert!((mean - u).abs() < 4.0 * (var / n as f64).sqrt());
        let want2 = u * (u + 1.0) / 2.0;
        let sd2 = (xs.iter().map(|x| (x * x - want2).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((m2 - want2).abs() < 4.0 * sd2 / (n as f64).sqrt());
    }

    #[test]
    fn free_density_normalises() {
        for fam in [BM, DensityFamily::Gamma, DensityFamily::StableHalf { c: 0.8 }] {
            for t in [0.2, 1.0, 3.0] {
                let m = fam.free_range(t, 0.0).integrate(|p| fam.log_density(t, p.offset_from(0.0)).exp()).unwrap();
                assert!((m - 1.0).abs() < 1e-7, "{fam:?} t={t}: {m}");
            }
        }
        let m = DensityFamily::Poisson
            .free_range(2.5, 0.0)
            .integrate(|p| DensityFamily::Poisson.log_density(2.5, p.x).exp())
            .unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }
}
