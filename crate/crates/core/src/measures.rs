//! Generating laws and the unnormalised measures `θ_t`, `Θ_t`.
//!
//! For a family `{f_t}`, a horizon `H` (the total activity `Σm` of a GLP,
//! or `T` of an LRB) and a generating law `ν`,
//!
//! ```text
//! θ_t(B; x) = ∫_B f_{H(1-t)}(z - x) / f_H(z) ν(dz),   Θ_t(x) = θ_t(ℝ; x).
//! ```
//!
//! `Θ_t(x)` is the h-function that turns the free process into the random
//! bridge, and `θ_t(·; x) / Θ_t(x)` is the conditional law of the terminal
//! value.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{GlpError, Result};
use crate::kernels::{gaussian_layout, DensityFamily, StateRange, Support};
use crate::quad::{self, Layout, Pt, Rule};

/// Default guard below the terminal time.
pub const DEFAULT_EPS_HORIZON: f64 = 1e-6;

/// Tolerance on the total mass of a generating law.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Parametric densities accepted for the continuous part of `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NamedDensity {
    Normal { mean: f64, sd: f64 },
    Gamma { shape: f64, rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
}

impl NamedDensity {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            NamedDensity::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            NamedDensity::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            NamedDensity::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            NamedDensity::Exponential { rate } => rate > 0.0 && rate.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(GlpError::InvalidSpec(format!("bad density parameters {self:?}")))
        }
    }

    pub fn log_pdf(&self, z: f64) -> f64 {
        match *self {
            NamedDensity::Normal { mean, sd } => {
                let u = (z - mean) / sd;
                -0.5 * u * u - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            NamedDensity::Gamma { shape, rate } => {
                if z > 0.0 {
                    shape * rate.ln() + (shape - 1.0) * z.ln() - rate * z - ln_gamma(shape)
                } else {
                    f64::NEG_INFINITY
                }
            }
            NamedDensity::Uniform { lo, hi } => {
                if (lo..=hi).contains(&z) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            NamedDensity::Exponential { rate } => {
                if z >= 0.0 {
                    rate.ln() - rate * z
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Closed support `[lo, hi]`, possibly unbounded.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            NamedDensity::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            NamedDensity::Gamma { .. } | NamedDensity::Exponential { .. } => (0.0, f64::INFINITY),
            NamedDensity::Uniform { lo, hi } => (lo, hi),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            NamedDensity::Normal { mean, .. } => mean,
            NamedDensity::Gamma { shape, rate } => shape / rate,
            NamedDensity::Uniform { lo, hi } => 0.5 * (lo + hi),
            NamedDensity::Exponential { rate } => 1.0 / rate,
        }
    }

    fn layout(&self) -> Layout {
        match *self {
            NamedDensity::Normal { mean, sd } => gaussian_layout(mean, sd),
            NamedDensity::Gamma { shape, rate } => {
                let sd = shape.sqrt() / rate;
                let m = shape / rate;
                Layout {
                    breaks: vec![0.0, m, m + sd, m + 4.0 * sd],
                    left_tail: false,
                    right_tail: true,
                    rule: Rule::EndpointSingular,
                }
                .normalise()
            }
            NamedDensity::Uniform { lo, hi } => Layout::finite(lo, hi, Rule::Smooth),
            NamedDensity::Exponential { rate } => Layout {
                breaks: vec![0.0, 1.0 / rate, 4.0 / rate],
                left_tail: false,
                right_tail: true,
                rule: Rule::Smooth,
            },
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NamedDensity::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            NamedDensity::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).expect("validated").sample(rng),
            NamedDensity::Uniform { lo, hi } => Uniform::new(lo, hi).expect("validated").sample(rng),
            NamedDensity::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
        }
    }
}

type LogDensityFn = Arc<dyn Fn(&Pt) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ContinuousKind {
    Named(NamedDensity),
    /// A density produced by conditioning: `log_pdf` already includes the
    /// part's weight, and `range` covers its support.
    Computed { log_pdf: LogDensityFn, range: Layout },
}

/// Absolutely continuous part of a generating law.
#[derive(Clone)]
pub struct ContinuousPart {
    weight: f64,
    kind: ContinuousKind,
}

impl fmt::Debug for ContinuousPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ContinuousKind::Named(d) => write!(f, "ContinuousPart({} × {d:?})", self.weight),
            ContinuousKind::Computed { range, .. } => {
                write!(f, "ContinuousPart({} × computed on {:?})", self.weight, range.breaks)
            }
        }
    }
}

impl ContinuousPart {
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn named(&self) -> Option<NamedDensity> {
        match self.kind {
            ContinuousKind::Named(d) => Some(d),
            ContinuousKind::Computed { .. } => None,
        }
    }

    /// `ln` of the weighted density at `p.x`.
    pub fn log_pdf(&self, p: &Pt) -> f64 {
        match &self.kind {
            ContinuousKind::Named(d) => self.weight.ln() + d.log_pdf(p.x),
            ContinuousKind::Computed { log_pdf, .. } => log_pdf(p),
        }
    }

    pub fn layout(&self) -> Layout {
        match &self.kind {
            ContinuousKind::Named(d) => d.layout(),
            ContinuousKind::Computed { range, .. } => range.clone(),
        }
    }

    fn support(&self) -> (f64, f64) {
        match &self.kind {
            ContinuousKind::Named(d) => d.support(),
            ContinuousKind::Computed { range, .. } => {
                let lo = if range.left_tail { f64::NEG_INFINITY } else { range.breaks[0] };
                let hi = if range.right_tail {
                    f64::INFINITY
                } else {
                    range.breaks[range.breaks.len() - 1]
                };
                (lo, hi)
            }
        }
    }

    /// `∫ g(z) p(z) dz` over the part (weight included).
    pub fn integrate<G: Fn(&Pt) -> f64>(&self, g: G) -> Result<f64> {
        self.layout().integrate(|p| g(p) * self.log_pdf(p).exp(), quad::ABS_TOL)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.kind {
            ContinuousKind::Named(d) => Ok(d.sample(rng)),
            ContinuousKind::Computed { range, .. } => {
                let f = |p: &Pt| self.log_pdf(p).exp();
                range.quantile(&f, rng.random::<f64>())
            }
        }
    }
}

/// The terminal law `ν`: weighted atoms plus an optional absolutely
/// continuous part. Total mass is one.
#[derive(Debug, Clone)]
pub struct GeneratingLaw {
    atoms: Vec<Atom>,
    continuous: Option<ContinuousPart>,
}

impl GeneratingLaw {
    pub fn dirac(z: f64) -> Self {
        GeneratingLaw {
            atoms: vec![Atom { location: z, mass: 1.0 }],
            continuous: None,
        }
    }

    /// A purely atomic law. Atoms are sorted and coincident locations merged.
    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        Self::mixed(atoms, None)
    }

    /// Atoms plus `weight` times a parametric density.
    pub fn mixed(atoms: Vec<Atom>, continuous: Option<(f64, NamedDensity)>) -> Result<Self> {
        let continuous = match continuous {
            Some((weight, d)) => {
                d.validate()?;
                if !(weight > 0.0 && weight <= 1.0 + MASS_TOL) {
                    return Err(GlpError::InvalidSpec(format!("continuous weight {weight} is not in (0, 1]")));
                }
                Some(ContinuousPart {
                    weight,
                    kind: ContinuousKind::Named(d),
                })
            }
            None => None,
        };
        let law = GeneratingLaw {
            atoms: normalise_atoms(atoms)?,
            continuous,
        };
        law.check_mass()?;
        Ok(law)
    }

    /// `½δ_a + ½δ_b`-style laws from `(location, mass)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::atomic(
            pairs
                .iter()
                .map(|&(location, mass)| Atom { location, mass })
                .collect(),
        )
    }

    /// Geometric law `P(k) ∝ (1-p)^k p` on `0..=kmax`, renormalised.
    pub fn geometric_truncated(p: f64, kmax: u32) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(GlpError::InvalidSpec(format!("geometric parameter {p} is not in (0, 1)")));
        }
        let w: Vec<f64> = (0..=kmax).map(|k| p * (1.0 - p).powi(k as i32)).collect();
        let total: f64 = w.iter().sum();
        Self::atomic(
            w.iter()
                .enumerate()
                .map(|(k, &m)| Atom {
                    location: k as f64,
                    mass: m / total,
                })
                .collect(),
        )
    }

    /// Mixture of Poisson laws `Σ w_j Poisson(λ_j)` on `0..=kmax`, renormalised.
    pub fn poisson_mixture(components: &[(f64, f64)], kmax: u32) -> Result<Self> {
        if components.is_empty() || components.iter().any(|&(w, l)| !(w > 0.0 && l > 0.0)) {
            return Err(GlpError::InvalidSpec("Poisson mixture needs positive weights and rates".into()));
        }
        let pmf = |k: u32| -> f64 {
            components
                .iter()
                .map(|&(w, l)| w * (k as f64 * l.ln() - l - ln_gamma(k as f64 + 1.0)).exp())
                .sum()
        };
        let w: Vec<f64> = (0..=kmax).map(pmf).collect();
        let total: f64 = w.iter().sum();
        Self::atomic(
            w.iter()
                .enumerate()
                .map(|(k, &m)| Atom {
                    location: k as f64,
                    mass: m / total,
                })
                .collect(),
        )
    }

    fn check_mass(&self) -> Result<()> {
        let m = self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.continuous.as_ref().map_or(0.0, |c| c.weight);
        if (m - 1.0).abs() > MASS_TOL {
            return Err(GlpError::InvalidSpec(format!("generating law has total mass {m}, expected 1")));
        }
        Ok(())
    }

    /// Checks that `ν` charges only states where `0 < f_H < ∞`.
    pub fn validate_for(&self, family: &DensityFamily, horizon: f64) -> Result<()> {
        for a in &self.atoms {
            let lf = family.log_density(horizon, a.location);
            if !lf.is_finite() {
                return Err(GlpError::InvalidSpec(format!(
                    "atom at {} is outside the region where f_{horizon} is positive and finite",
                    a.location
                )));
            }
        }
        if let Some(c) = &self.continuous {
            let (lo, hi) = c.support();
            let ok = match family.support() {
                Support::RealLine => true,
                Support::NonNegativeReals => lo >= 0.0 && hi > 0.0,
                Support::NonNegativeIntegers => false,
            };
            if !ok {
                return Err(GlpError::InvalidSpec(format!(
                    "continuous part on [{lo}, {hi}] is incompatible with the {:?} support",
                    family.support()
                )));
            }
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn continuous(&self) -> Option<&ContinuousPart> {
        self.continuous.as_ref()
    }

    pub fn is_atomic(&self) -> bool {
        self.continuous.is_none()
    }

    /// The single location of a one-atom law.
    pub fn as_dirac(&self) -> Option<f64> {
        match (&self.atoms[..], &self.continuous) {
            ([a], None) => Some(a.location),
            _ => None,
        }
    }

    /// Mass of an atom located exactly at `z`.
    pub fn atom_mass(&self, z: f64) -> f64 {
        self.atoms.iter().find(|a| a.location == z).map_or(0.0, |a| a.mass)
    }

    /// `∫ g dν`.
    pub fn expect<G: Fn(&Pt) -> f64>(&self, g: G) -> Result<f64> {
        let a: f64 = self.atoms.iter().map(|a| a.mass * g(&Pt::plain(a.location))).sum();
        let c = match &self.continuous {
            Some(c) => c.integrate(&g)?,
            None => 0.0,
        };
        Ok(a + c)
    }

    pub fn mean(&self) -> Result<f64> {
        self.expect(|p| p.x)
    }

    /// `ν(B)`.
    pub fn measure(&self, set: &StateSet) -> Result<f64> {
        let a: f64 = self.atoms.iter().filter(|a| set.contains(a.location)).map(|a| a.mass).sum();
        let c = match &self.continuous {
            Some(c) => set.integrate_continuous(&c.layout(), &|p| c.log_pdf(p).exp())?,
            None => 0.0,
        };
        Ok(a + c)
    }

    /// `ν((-∞, y])`.
    pub fn cdf(&self, y: f64) -> Result<f64> {
        self.measure(&StateSet::Interval {
            lo: f64::NEG_INFINITY,
            hi: y,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.mass;
            if u < acc {
                return Ok(a.location);
            }
        }
        match &self.continuous {
            Some(c) => c.sample(rng),
            // Rounding left a sliver of mass past the last atom.
            None => Ok(self.atoms[self.atoms.len() - 1].location),
        }
    }

    /// The law shifted by `-by`: the law of `Z - by` for `Z ~ ν`.
    pub fn shifted(&self, by: f64) -> GeneratingLaw {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location - by,
                mass: a.mass,
            })
            .collect();
        let continuous = self.continuous.as_ref().map(|c| {
            let inner = c.clone();
            let mut range = c.layout();
            for b in range.breaks.iter_mut() {
                *b -= by;
            }
            ContinuousPart {
                weight: c.weight,
                kind: ContinuousKind::Computed {
                    log_pdf: Arc::new(move |p: &Pt| inner.log_pdf(&Pt::plain(p.x + by))),
                    range,
                },
            }
        });
        GeneratingLaw { atoms, continuous }
    }

    /// Probability generating function `Σ_k z^k A(k)` of an integer law.
    pub fn pgf(&self, z: f64) -> Result<f64> {
        self.require_integer_atoms("pgf")?;
        if !(0.0..=1.0).contains(&z) {
            return Err(GlpError::domain("pgf", format!("argument {z} is outside [0, 1]")));
        }
        Ok(self.atoms.iter().map(|a| a.mass * z.powi(a.location as i32)).sum())
    }

    /// `A(k)`.
    pub fn integer_mass(&self, k: u64) -> f64 {
        self.atom_mass(k as f64)
    }

    pub(crate) fn require_integer_atoms(&self, op: &'static str) -> Result<()> {
        if self.continuous.is_some() {
            return Err(GlpError::unsupported(op, "the law has a continuous part"));
        }
        if let Some(a) = self.atoms.iter().find(|a| a.location < 0.0 || a.location.fract() != 0.0) {
            return Err(GlpError::unsupported(
                op,
                format!("atom at {} is not a nonnegative integer", a.location),
            ));
        }
        Ok(())
    }

    /// The serialisable description; fails for conditioned laws whose
    /// density is not a named family.
    pub fn to_config(&self) -> Result<LawConfig> {
        let continuous = match &self.continuous {
            None => None,
            Some(c) => match c.kind {
                ContinuousKind::Named(d) => Some(ContinuousConfig {
                    weight: c.weight,
                    density: d,
                }),
                ContinuousKind::Computed { .. } => {
                    return Err(GlpError::Config(
                        "a conditioned generating law has no named density and cannot be serialised".into(),
                    ))
                }
            },
        };
        Ok(LawConfig {
            atoms: self.atoms.clone(),
            continuous,
        })
    }

    pub fn from_config(cfg: &LawConfig) -> Result<Self> {
        Self::mixed(cfg.atoms.clone(), cfg.continuous.map(|c| (c.weight, c.density)))
    }
}

fn normalise_atoms(mut atoms: Vec<Atom>) -> Result<Vec<Atom>> {
    if let Some(a) = atoms.iter().find(|a| !(a.location.is_finite() && a.mass >= 0.0 && a.mass.is_finite())) {
        return Err(GlpError::InvalidSpec(format!("bad atom {a:?}")));
    }
    atoms.retain(|a| a.mass > 0.0);
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if last.location == a.location => last.mass += a.mass,
            _ => out.push(a),
        }
    }
    Ok(out)
}

/// Config form of a [`GeneratingLaw`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<ContinuousConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousConfig {
    pub weight: f64,
    pub density: NamedDensity,
}

impl Serialize for GeneratingLaw {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_config().map_err(serde::ser::Error::custom)?.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GeneratingLaw {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let cfg = LawConfig::deserialize(d)?;
        GeneratingLaw::from_config(&cfg).map_err(serde::de::Error::custom)
    }
}

impl PartialEq for GeneratingLaw {
    /// Equal atoms and equal named continuous parts; computed parts never
    /// compare equal.
    fn eq(&self, other: &Self) -> bool {
        let cont = match (&self.continuous, &other.continuous) {
            (None, None) => true,
            (Some(a), Some(b)) => a.weight == b.weight && a.named().is_some() && a.named() == b.named(),
            _ => false,
        };
        cont && self.atoms == other.atoms
    }
}

/// Sets `B` at which `θ_t(B; x)` can be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSet {
    All,
    /// Closed interval; either end may be infinite.
    Interval { lo: f64, hi: f64 },
    /// Finite set of points: charges only atoms.
    Points(Vec<f64>),
    /// Union of pairwise disjoint sets.
    Union(Vec<StateSet>),
}

impl StateSet {
    pub fn contains(&self, z: f64) -> bool {
        match self {
            StateSet::All => true,
            StateSet::Interval { lo, hi } => *lo <= z && z <= *hi,
            StateSet::Points(ps) => ps.contains(&z),
            StateSet::Union(parts) => parts.iter().any(|s| s.contains(z)),
        }
    }

    fn integrate_continuous(&self, layout: &Layout, f: &dyn Fn(&Pt) -> f64) -> Result<f64> {
        match self {
            StateSet::All => layout.integrate(f, quad::ABS_TOL),
            StateSet::Interval { lo, hi } => {
                let first = if layout.left_tail { f64::NEG_INFINITY } else { layout.breaks[0] };
                let last = if layout.right_tail {
                    f64::INFINITY
                } else {
                    layout.breaks[layout.breaks.len() - 1]
                };
                let (a, b) = (lo.max(first), hi.min(last));
                if !(a < b) {
                    return Ok(0.0);
                }
                layout.clone().clip(a, b).integrate(f, quad::ABS_TOL)
            }
            StateSet::Points(_) => Ok(0.0),
            StateSet::Union(parts) => parts.iter().map(|s| s.integrate_continuous(layout, f)).sum(),
        }
    }
}

/// Validates `t ∈ [0, 1)` and caps it at `1 - eps`.
pub fn cap_time(op: &'static str, t: f64, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(GlpError::Horizon { op, t, range: "[0, 1)" });
    }
    Ok(t.min(1.0 - eps))
}

/// `θ_t`, `Θ_t` and the conditional terminal law for one family, law and
/// horizon. Atom log-normalisers `ln f_H(z_k)` are cached on construction.
#[derive(Debug, Clone)]
pub struct Theta {
    family: DensityFamily,
    law: GeneratingLaw,
    horizon: f64,
    eps: f64,
    log_f_atoms: Vec<f64>,
}

impl Theta {
    pub fn new(family: DensityFamily, law: GeneratingLaw, horizon: f64) -> Result<Self> {
        family.validate()?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(GlpError::InvalidSpec(format!("horizon must be positive, got {horizon}")));
        }
        law.validate_for(&family, horizon)?;
        let log_f_atoms = law.atoms.iter().map(|a| family.log_density(horizon, a.location)).collect();
        Ok(Theta {
            family,
            law,
            horizon,
            eps: DEFAULT_EPS_HORIZON,
            log_f_atoms,
        })
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn family(&self) -> &DensityFamily {
        &self.family
    }

    pub fn law(&self) -> &GeneratingLaw {
        &self.law
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `ln[f_{H(1-t)}(z - x) / f_H(z)]` for a continuous-part point.
    fn log_kernel(&self, rem: f64, x: f64, p: &Pt) -> f64 {
        self.family.log_density(rem, p.offset_from(x)) - self.family.log_density(self.horizon, p.x)
    }

    /// Panels for `z ↦ f_{rem}(z - x) p(z) / f_H(z)`.
    fn continuous_layout(&self, c: &ContinuousPart, rem: f64, x: f64) -> Layout {
        let own = c.layout();
        let s = self.family.scale(rem);
        let (lo, hi) = c.support();
        let mut lay = match self.family {
            DensityFamily::Brownian { .. } => {
                let mut l = gaussian_layout(x, s);
                l.breaks.extend(own.breaks.iter().copied());
                l.rule = Rule::Smooth;
                l.left_tail = own.left_tail;
                l.right_tail = own.right_tail;
                l.normalise().clip(lo, hi)
            }
            _ => {
                if lo.max(x) >= hi {
                    return Layout::finite(x, x, Rule::EndpointSingular).clip(x, x);
                }
                let mut breaks = own.breaks.clone();
                breaks.extend([x, x + s, x + 10.0 * s]);
                Layout {
                    breaks,
                    left_tail: false,
                    right_tail: own.right_tail,
                    rule: Rule::EndpointSingular,
                }
                .normalise()
                .clip(lo.max(x), hi)
            }
        };
        if lay.breaks.len() < 2 && !lay.right_tail && !lay.left_tail {
            lay.breaks.clear();
        }
        lay
    }

    /// Per-atom log weights `ln ν_k + ln f_{H(1-t)}(z_k - x) - ln f_H(z_k)`.
    fn atom_log_weights(&self, t: f64, x: f64) -> Vec<f64> {
        if t == 0.0 {
            return self.law.atoms.iter().map(|a| a.mass.ln()).collect();
        }
        self.atom_log_terms(self.horizon * (1.0 - t), x)
    }

    /// Per-atom `ln ν_k + ln f_rem(z_k - x) - ln f_H(z_k)`.
    pub(crate) fn atom_log_terms(&self, rem: f64, x: f64) -> Vec<f64> {
        self.law
            .atoms
            .iter()
            .zip(&self.log_f_atoms)
            .map(|(a, lf)| a.mass.ln() + self.family.log_density(rem, a.location - x) - lf)
            .collect()
    }

    fn continuous_mass(&self, t: f64, x: f64, set: &StateSet) -> Result<f64> {
        let Some(c) = &self.law.continuous else {
            return Ok(0.0);
        };
        if t == 0.0 {
            return set.integrate_continuous(&c.layout(), &|p| c.log_pdf(p).exp());
        }
        let rem = self.horizon * (1.0 - t);
        let lay = self.continuous_layout(c, rem, x);
        if lay.breaks.is_empty() {
            return Ok(0.0);
        }
        set.integrate_continuous(&lay, &|p| (c.log_pdf(p) + self.log_kernel(rem, x, p)).exp())
    }

    /// `ln ∫ f_rem(z - x) / f_H(z) ν(dz)` for an arbitrary remaining time
    /// `rem`; `Θ_t(x)` is the case `rem = H(1 - t)`, `t > 0`.
    pub fn log_h(&self, rem: f64, x: f64) -> Result<f64> {
        if !(rem > 0.0) {
            return Err(GlpError::domain("h-function", format!("remaining time must be positive, got {rem}")));
        }
        let mut terms = self.atom_log_terms(rem, x);
        if let Some(c) = &self.law.continuous {
            let lay = self.continuous_layout(c, rem, x);
            if !lay.breaks.is_empty() {
                let v = lay.integrate(|p| (c.log_pdf(p) + self.log_kernel(rem, x, p)).exp(), quad::ABS_TOL)?;
                terms.push(v.ln());
            }
        }
        Ok(quad::log_sum_exp(terms))
    }

    /// `θ_t(B; x)`.
    pub fn theta(&self, t: f64, x: f64, set: &StateSet) -> Result<f64> {
        let t = cap_time("theta", t, self.eps)?;
        let lw = self.atom_log_weights(t, x);
        let atoms = quad::log_sum_exp(
            self.law
                .atoms
                .iter()
                .zip(lw)
                .filter(|(a, _)| set.contains(a.location))
                .map(|(_, w)| w),
        )
        .exp();
        Ok(atoms + self.continuous_mass(t, x, set)?)
    }

    /// `ln Θ_t(x)`, `-inf` when `x` cannot be reached.
    pub fn log_big_theta(&self, t: f64, x: f64) -> Result<f64> {
        let t = cap_time("Theta", t, self.eps)?;
        let mut terms = self.atom_log_weights(t, x);
        if self.law.continuous.is_some() {
            terms.push(self.continuous_mass(t, x, &StateSet::All)?.ln());
        }
        Ok(quad::log_sum_exp(terms))
    }

    /// `Θ_t(x)`.
    pub fn big_theta(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.log_big_theta(t, x)?.exp())
    }

    fn reachable(&self, op: &'static str, t: f64, x: f64) -> Result<f64> {
        let l = self.log_big_theta(t, x)?;
        if l == f64::NEG_INFINITY || l.is_nan() {
            return Err(GlpError::null_event(op, format!("Theta vanishes at t = {t}, x = {x}")));
        }
        Ok(l)
    }

    /// Conditional law of the terminal value given value `x` at time `t`:
    /// `θ_t(dz; x) / Θ_t(x)`.
    pub fn posterior(&self, t: f64, x: f64) -> Result<GeneratingLaw> {
        let t = cap_time("terminal law", t, self.eps)?;
        if t == 0.0 {
            return Ok(self.law.clone());
        }
        self.posterior_rem(self.horizon * (1.0 - t), x)
    }

    /// The law `ν(dz) f_rem(z - x) / f_H(z)`, normalised. With
    /// `rem = H(1 - t)` this is the terminal law given `x` at `t`; other
    /// values of `rem` arise when only part of the path is observed.
    pub fn posterior_rem(&self, rem: f64, x: f64) -> Result<GeneratingLaw> {
        let log_norm = self.log_h(rem, x)?;
        if log_norm == f64::NEG_INFINITY || log_norm.is_nan() {
            return Err(GlpError::null_event("terminal law", format!("state {x} is unreachable")));
        }
        let atoms: Vec<Atom> = self
            .law
            .atoms
            .iter()
            .zip(self.atom_log_terms(rem, x))
            .map(|(a, w)| Atom {
                location: a.location,
                mass: (w - log_norm).exp(),
            })
            .filter(|a| a.mass > 0.0)
            .collect();
        let continuous = match &self.law.continuous {
            None => None,
            Some(c) => {
                let range = self.continuous_layout(c, rem, x);
                let this = self.clone();
                let inner = c.clone();
                let log_pdf: LogDensityFn =
                    Arc::new(move |p: &Pt| inner.log_pdf(p) + this.log_kernel(rem, x, p) - log_norm);
                let weight = if range.breaks.is_empty() {
                    0.0
                } else {
                    range.integrate(|p| log_pdf(p).exp(), quad::ABS_TOL)?
                };
                (weight > 0.0).then(|| ContinuousPart {
                    weight,
                    kind: ContinuousKind::Computed { log_pdf, range },
                })
            }
        };
        Ok(GeneratingLaw {
            atoms: normalise_atoms(atoms)?,
            continuous,
        })
    }

    /// `E(Z | value x at t)` for the terminal value `Z`.
    pub fn posterior_mean(&self, t: f64, x: f64) -> Result<f64> {
        if !self.family.is_integrable() {
            return Err(GlpError::Integrability {
                op: "conditional terminal mean",
                detail: format!("{:?} has no finite mean", self.family),
            });
        }
        self.posterior(t, x)?.mean()
    }

    /// Law of the increment over `[s, t]` given value `x` at `s`; `t = 1`
    /// gives the posterior shifted by `x`.
    pub fn increment_law(&self, s: f64, x: f64, t: f64) -> Result<GeneratingLaw> {
        if !(0.0 <= s && s < t && t <= 1.0) {
            return Err(GlpError::Horizon {
                op: "conditional generating law",
                t,
                range: "0 <= s < t <= 1",
            });
        }
        if t == 1.0 {
            return Ok(self.posterior(s, x)?.shifted(x));
        }
        let s = cap_time("conditional generating law", s, self.eps)?;
        let t = cap_time("conditional generating law", t, self.eps)?;
        let log_norm = self.reachable("conditional generating law", s, x)?;
        let span = self.horizon * (t - s);
        let fam = self.family;
        if fam.is_lattice() {
            let top = self.law.atoms.last().map_or(x, |a| a.location);
            let mut atoms = Vec::new();
            let mut d = 0.0;
            while x + d <= top {
                let lw = self.log_big_theta(t, x + d)? + fam.log_density(span, d) - log_norm;
                atoms.push(Atom {
                    location: d,
                    mass: lw.exp(),
                });
                d += 1.0;
            }
            return Ok(GeneratingLaw {
                atoms: normalise_atoms(atoms)?,
                continuous: None,
            });
        }
        let this = self.clone();
        let range = match self.increment_range(s, x, t) {
            StateRange::Line(l) => l,
            StateRange::Lattice { .. } => unreachable!("lattice handled above"),
        };
        let log_pdf: LogDensityFn = Arc::new(move |p: &Pt| {
            let d = p.offset_from(0.0);
            let lt = this.log_big_theta(t, x + d).unwrap_or(f64::NEG_INFINITY);
            lt + fam.log_density(span, d) - log_norm
        });
        Ok(GeneratingLaw {
            atoms: Vec::new(),
            continuous: Some(ContinuousPart {
                weight: 1.0,
                kind: ContinuousKind::Computed { log_pdf, range },
            }),
        })
    }

    /// Integration range for the increment over `[s, t]` from `x`.
    pub(crate) fn increment_range(&self, s: f64, x: f64, t: f64) -> StateRange {
        let span = self.horizon * (t - s);
        let rem = self.horizon * (1.0 - t);
        match self.family {
            DensityFamily::Poisson => {
                let top = self.law.atoms.last().map_or(x, |a| a.location);
                StateRange::Lattice {
                    lo: 0,
                    hi: (top - x).max(0.0) as i64,
                }
            }
            DensityFamily::Brownian { sigma } => {
                // Around the free increment and around each bridge target.
                let sd = sigma * span.sqrt();
                let mut l = gaussian_layout(0.0, sd);
                let shrink = (span * rem / (span + rem)).sqrt() * sigma;
                for a in &self.law.atoms {
                    let m = (a.location - x) * span / (span + rem);
                    l.breaks.extend((-6..=6).map(|k| m + k as f64 * shrink));
                }
                if let Some(c) = &self.law.continuous {
                    l.breaks.extend(c.layout().breaks.iter().map(|b| b - x));
                }
                StateRange::Line(l.normalise())
            }
            DensityFamily::Gamma | DensityFamily::StableHalf { .. } => {
                let sc = self.family.scale(span);
                let mut breaks = vec![0.0, sc, 10.0 * sc];
                for a in &self.law.atoms {
                    if a.location > x {
                        breaks.push(a.location - x);
                    }
                }
                let bounded = self.law.continuous.is_none();
                let top = self.law.atoms.last().map_or(0.0, |a| a.location - x);
                let mut l = Layout {
                    breaks,
                    left_tail: false,
                    right_tail: !bounded,
                    rule: Rule::EndpointSingular,
                }
                .normalise();
                if bounded {
                    l = l.clip(0.0, top);
                }
                StateRange::Line(l)
            }
        }
    }
}

/// `θ_t(B; x)` for a law on the terminal value at horizon `H`.
pub fn theta(law: &GeneratingLaw, family: &DensityFamily, horizon: f64, t: f64, x: f64, set: &StateSet) -> Result<f64> {
    Theta::new(*family, law.clone(), horizon)?.theta(t, x, set)
}

/// `Θ_t(x)`.
pub fn big_theta(law: &GeneratingLaw, family: &DensityFamily, horizon: f64, t: f64, x: f64) -> Result<f64> {
    Theta::new(*family, law.clone(), horizon)?.big_theta(t, x)
}

/// `G_ν(z)`.
pub fn pgf(law: &GeneratingLaw, z: f64) -> Result<f64> {
    law.pgf(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BM: DensityFamily = DensityFamily::Brownian { sigma: 1.0 };

    fn two_point() -> GeneratingLaw {
        GeneratingLaw::from_pairs(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn theta_at_zero_is_nu() {
        let th = Theta::new(BM, two_point(), 1.0).unwrap();
        assert_eq!(th.big_theta(0.0, 3.7).unwrap(), 1.0);
        assert_eq!(th.theta(0.0, 0.0, &StateSet::Points(vec![1.0])).unwrap(), 0.5);
    }

    #[test]
    fn theta_two_point_value() {
        let th = Theta::new(BM, two_point(), 1.0).unwrap();
        let v = th.theta(0.5, 0.0, &StateSet::Points(vec![1.0])).unwrap();
        let f05 = (-1.0f64).exp() / (std::f64::consts::PI).sqrt();
        let f1 = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - 0.5 * f05 / f1).abs() < 1e-14);
        // f_{0.5}(1) = e^{-1}/sqrt(pi) = 0.207554, so θ = 0.428882.
        assert!((v - 0.428_882).abs() < 1e-6, "{v}");
    }

    #[test]
    fn dirac_reduction() {
        let th = Theta::new(DensityFamily::Gamma, GeneratingLaw::dirac(2.0), 3.0).unwrap();
        let v = th.big_theta(0.4, 0.5).unwrap();
        let g = DensityFamily::Gamma;
        let want = g.density(1.8, 1.5).unwrap() / g.density(3.0, 2.0).unwrap();
        assert!((v - want).abs() < 1e-13 * want);
    }

    #[test]
    fn horizon_errors() {
        let th = Theta::new(BM, two_point(), 1.0).unwrap();
        assert!(matches!(th.big_theta(1.0, 0.0), Err(GlpError::Horizon { .. })));
        assert!(matches!(th.big_theta(-0.1, 0.0), Err(GlpError::Horizon { .. })));
        // Just below one is capped, not rejected.
        assert!(th.big_theta(1.0 - 1e-9, 0.9).unwrap().is_finite());
    }

    #[test]
    fn pgf_examples() {
        assert_eq!(GeneratingLaw::dirac(2.0).pgf(0.5).unwrap(), 0.25);
        let law = GeneratingLaw::from_pairs(&[(0.0, 0.5), (3.0, 0.5)]).unwrap();
        assert_eq!(law.pgf(0.5).unwrap(), 0.5625);
        assert!((law.pgf(1.0).unwrap() - 1.0).abs() < 1e-15);
        let cont = GeneratingLaw::mixed(vec![], Some((1.0, NamedDensity::Exponential { rate: 1.0 }))).unwrap();
        assert!(matches!(cont.pgf(0.5), Err(GlpError::UnsupportedLaw { .. })));
    }

    #[test]
    fn law_validation() {
        assert!(GeneratingLaw::from_pairs(&[(0.0, 0.4)]).is_err());
        let law = GeneratingLaw::from_pairs(&[(0.5, 1.0)]).unwrap();
        assert!(law.validate_for(&DensityFamily::Poisson, 1.0).is_err());
        let law = GeneratingLaw::from_pairs(&[(0.0, 1.0)]).unwrap();
        assert!(law.validate_for(&DensityFamily::Gamma, 2.0).is_err());
        let geo = GeneratingLaw::geometric_truncated(0.5, 20).unwrap();
        assert!((geo.atoms().iter().map(|a| a.mass).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn posterior_is_bayes() {
        let th = Theta::new(BM, two_point(), 1.0).unwrap();
        let post = th.posterior(0.3, 0.2).unwrap();
        let f = |z: f64| BM.density(0.7, z - 0.2).unwrap() / BM.density(1.0, z).unwrap();
        let odds = post.atom_mass(1.0) / post.atom_mass(-1.0);
        assert!((odds - f(1.0) / f(-1.0)).abs() < 1e-12);
    }

    #[test]
    fn continuous_part_normalises_and_posterior_integrates() {
        let law = GeneratingLaw::mixed(
            vec![Atom {
                location: 0.5,
                mass: 0.3,
            }],
            Some((0.7, NamedDensity::Normal { mean: 0.0, sd: 1.5 })),
        )
        .unwrap();
        assert!((law.measure(&StateSet::All).unwrap() - 1.0).abs() < 1e-9);
        let th = Theta::new(BM, law, 2.0).unwrap();
        let post = th.posterior(0.6, 1.1).unwrap();
        assert!((post.measure(&StateSet::All).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn increment_law_dirac_terminal() {
        let th = Theta::new(BM, GeneratingLaw::dirac(1.5), 1.0).unwrap();
        let law = th.increment_law(0.4, 0.5, 1.0).unwrap();
        assert_eq!(law.as_dirac(), Some(1.0));
    }

    #[test]
    fn increment_law_poisson_normalises() {
        let geo = GeneratingLaw::geometric_truncated(0.5, 20).unwrap();
        let th = Theta::new(DensityFamily::Poisson, geo, 3.0).unwrap();
        let law = th.increment_law(0.3, 2.0, 0.6).unwrap();
        let total: f64 = law.atoms().iter().map(|a| a.mass).sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn law_config_round_trip() {
        let law = GeneratingLaw::mixed(
            vec![Atom {
                location: 1.0,
                mass: 0.25,
            }],
            Some((0.75, NamedDensity::Gamma { shape: 2.0, rate: 1.5 })),
        )
        .unwrap();
        let text = toml::to_string(&law).unwrap();
        let back: GeneratingLaw = toml::from_str(&text).unwrap();
        assert_eq!(law, back);
        let th = Theta::new(DensityFamily::Gamma, law, 1.0).unwrap();
        assert!(toml::to_string(&th.posterior(0.5, 0.4).unwrap()).is_err());
    }
}
