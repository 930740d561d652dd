//! Transition laws of a GLP, its coordinates and its sum process.

use super::GlpSpec;
use crate::error::{GlpError, Result};
use crate::kernels::{bridge_increment_cdf, gaussian_layout, DensityFamily, StateRange};
use crate::measures::{cap_time, GeneratingLaw, StateSet};
use crate::quad::{Layout, Pt, Rule};

fn check_times(op: &'static str, s: f64, t: f64) -> Result<()> {
    if !(0.0 <= s && s < t && t < 1.0) {
        return Err(GlpError::Horizon {
            op,
            t,
            range: "0 <= s < t < 1",
        });
    }
    Ok(())
}

fn check_dim(op: &'static str, spec: &GlpSpec, v: &[f64]) -> Result<()> {
    if v.len() != spec.n() {
        return Err(GlpError::domain(op, format!("expected {} coordinates, got {}", spec.n(), v.len())));
    }
    Ok(())
}

fn check_support(op: &'static str, spec: &GlpSpec, v: &[f64]) -> Result<()> {
    if let Some(y) = v.iter().find(|y| !spec.family().in_support(**y)) {
        return Err(GlpError::domain(
            op,
            format!("state {y} is outside the {:?} support", spec.family().support()),
        ));
    }
    Ok(())
}

fn checked_log_norm(op: &'static str, spec: &GlpSpec, s: f64, r: f64) -> Result<f64> {
    let l = spec.theta().log_big_theta(s, r)?;
    if l == f64::NEG_INFINITY || l.is_nan() {
        return Err(GlpError::null_event(op, format!("Theta_s vanishes at s = {s}, sum {r}")));
    }
    Ok(l)
}

/// Joint transition density from `x` at `s` to `y` at `t`:
/// `Θ_t(Σy) / Θ_s(Σx) · Π_i f_{(t-s) m_i}(y_i - x_i)`.
pub fn glp_transition_density(spec: &GlpSpec, s: f64, x: &[f64], t: f64, y: &[f64]) -> Result<f64> {
    check_dim("joint transition density", spec, y)?;
    let steps: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi - xi).collect();
    joint_density_at(spec, s, x, t, y, &steps)
}

/// Joint density at `y` with the increments `y - x` supplied separately, so
/// quadrature can pass offsets that are exact near a singular endpoint.
fn joint_density_at(spec: &GlpSpec, s: f64, x: &[f64], t: f64, y: &[f64], steps: &[f64]) -> Result<f64> {
    const OP: &str = "joint transition density";
    check_times(OP, s, t)?;
    check_dim(OP, spec, x)?;
    check_dim(OP, spec, y)?;
    check_support(OP, spec, y)?;
    let fam = spec.family();
    let ln = checked_log_norm(OP, spec, s, x.iter().sum())?;
    let lf: f64 = spec
        .activity()
        .m()
        .iter()
        .zip(steps)
        .map(|(m, d)| fam.log_density((t - s) * m, *d))
        .sum();
    if lf == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok((spec.theta().log_big_theta(t, y.iter().sum())? + lf - ln).exp())
}

/// Conditional law of `ξ_1` given `ξ_s = x`.
#[derive(Debug, Clone)]
pub struct TerminalLaw<'a> {
    spec: &'a GlpSpec,
    s: f64,
    x: Vec<f64>,
    log_norm: f64,
}

/// Builds the terminal law given `ξ_s = x`, `0 <= s < 1`.
pub fn terminal_transition_law<'a>(spec: &'a GlpSpec, s: f64, x: &[f64]) -> Result<TerminalLaw<'a>> {
    const OP: &str = "terminal transition law";
    check_dim(OP, spec, x)?;
    let s = cap_time(OP, s, spec.eps())?;
    Ok(TerminalLaw {
        spec,
        s,
        x: x.to_vec(),
        log_norm: checked_log_norm(OP, spec, s, x.iter().sum())?,
    })
}

impl TerminalLaw<'_> {
    /// `P(ξ_1^{(i)} ∈ dz_i, i < n; ξ_1^{(n)} ∈ B)` per unit `dz`:
    /// `θ_{τ(s)}(B + Σz; x_n + Σz) / Θ_s(Σx) · Π_{i<n} f_{(1-s) m_i}(z_i - x_i)`.
    pub fn probability(&self, head: &[f64], set: &StateSet) -> Result<f64> {
        let n = self.spec.n();
        if head.len() + 1 != n {
            return Err(GlpError::domain("terminal transition law", "expected n - 1 leading coordinates"));
        }
        let fam = self.spec.family();
        let m = self.spec.activity().m();
        let lf: f64 = head
            .iter()
            .zip(&self.x)
            .zip(m)
            .map(|((z, x), mi)| fam.log_density((1.0 - self.s) * mi, z - x))
            .sum();
        if lf == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let sz: f64 = head.iter().sum();
        let shifted = shift_set(set, sz);
        let tau = self.spec.tau(self.s);
        let th = if n == 1 {
            self.spec.theta().theta(self.s, self.x[0], set)?
        } else {
            self.spec.theta().theta(tau, self.x[n - 1] + sz, &shifted)?
        };
        Ok(th * (lf - self.log_norm).exp())
    }

    /// Joint density (continuous families, w.r.t. Lebesgue measure and the
    /// density of `ν`) or mass function (lattice family, w.r.t. the atoms):
    /// `ν̃(Σz) / (Θ_s(Σx) f_{Σm}(Σz)) · Π_i f_{(1-s) m_i}(z_i - x_i)`.
    pub fn density(&self, z: &[f64]) -> Result<f64> {
        check_dim("terminal transition law", self.spec, z)?;
        let fam = self.spec.family();
        let total = self.spec.total_activity();
        let r: f64 = z.iter().sum();
        let law = self.spec.law();
        let nu = if fam.is_lattice() {
            law.atom_mass(r)
        } else {
            law.continuous().map_or(0.0, |c| c.log_pdf(&Pt::plain(r)).exp())
        };
        if nu == 0.0 {
            return Ok(0.0);
        }
        let lf: f64 = z
            .iter()
            .zip(&self.x)
            .zip(self.spec.activity().m())
            .map(|((zi, xi), mi)| fam.log_density((1.0 - self.s) * mi, zi - xi))
            .sum();
        Ok((nu.ln() + lf - fam.log_density(total, r) - self.log_norm).exp())
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

fn shift_set(set: &StateSet, by: f64) -> StateSet {
    match set {
        StateSet::All => StateSet::All,
        StateSet::Interval { lo, hi } => StateSet::Interval {
            lo: lo + by,
            hi: hi + by,
        },
        StateSet::Points(ps) => StateSet::Points(ps.iter().map(|p| p + by).collect()),
        StateSet::Union(parts) => StateSet::Union(parts.iter().map(|p| shift_set(p, by)).collect()),
    }
}

/// `Ψ^{(i)}_t(y) = ∫ f_{Σm - t m_i}(r - y) / f_{Σm}(r) ν(dr)`, in logs.
fn log_psi(spec: &GlpSpec, i: usize, t: f64, y: f64) -> Result<f64> {
    let total = spec.total_activity();
    spec.theta().log_h(total - t * spec.activity().m()[i], y)
}

fn check_coord(op: &'static str, spec: &GlpSpec, i: usize) -> Result<()> {
    if i >= spec.n() {
        return Err(GlpError::domain(op, format!("coordinate {i} out of range for n = {}", spec.n())));
    }
    Ok(())
}

/// Transition density of coordinate `i` in its own filtration:
/// `Ψ_t(y) / Ψ_s(x) · f_{(t-s) m_i}(y - x)`.
pub fn marginal_transition_density(spec: &GlpSpec, i: usize, s: f64, x: f64, t: f64, y: f64) -> Result<f64> {
    marginal_density_at(spec, i, s, x, t, y, y - x)
}

fn marginal_density_at(spec: &GlpSpec, i: usize, s: f64, x: f64, t: f64, y: f64, step: f64) -> Result<f64> {
    const OP: &str = "marginal transition density";
    check_times(OP, s, t)?;
    check_coord(OP, spec, i)?;
    check_support(OP, spec, &[y])?;
    let (s, t) = (cap_time(OP, s, spec.eps())?, cap_time(OP, t, spec.eps())?);
    let ls = log_psi(spec, i, s, x)?;
    if ls == f64::NEG_INFINITY {
        return Err(GlpError::null_event(OP, format!("Psi_s vanishes at x = {x}")));
    }
    let mi = spec.activity().m()[i];
    let lf = spec.family().log_density((t - s) * mi, step);
    if lf == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok((log_psi(spec, i, t, y)? + lf - ls).exp())
}

/// CDF at `y` of coordinate `i` at `t` given its own value `x` at `s`:
/// a mixture over the conditional law of `R_1` of bridge marginals.
pub fn marginal_transition_cdf(spec: &GlpSpec, i: usize, s: f64, x: f64, t: f64, y: f64) -> Result<f64> {
    const OP: &str = "marginal transition density";
    check_times(OP, s, t)?;
    check_coord(OP, spec, i)?;
    let (s, t) = (cap_time(OP, s, spec.eps())?, cap_time(OP, t, spec.eps())?);
    let total = spec.total_activity();
    let mi = spec.activity().m()[i];
    let post = spec.theta().posterior_rem(total - s * mi, x)?;
    let (a, b) = ((t - s) * mi, total - t * mi);
    mixture_cdf(spec.family(), &post, a, b, x, y)
}

fn mixture_cdf(fam: &DensityFamily, post: &GeneratingLaw, a: f64, b: f64, base: f64, y: f64) -> Result<f64> {
    let atoms = post
        .atoms()
        .iter()
        .map(|at| Ok(at.mass * bridge_increment_cdf(fam, a, b, at.location - base, y - base)?))
        .sum::<Result<f64>>()?;
    let cont = match post.continuous() {
        None => 0.0,
        Some(c) => c.integrate(|p| bridge_increment_cdf(fam, a, b, p.x - base, y - base).unwrap_or(f64::NAN))?,
    };
    Ok((atoms + cont).clamp(0.0, 1.0))
}

/// Transition density of coordinate `i` given the whole vector `ξ_s = x`:
/// `Θ^{(i)}_t(x, y) / Θ_s(Σx) · f_{(t-s) m_i}(y - x_i)` with
/// `Θ^{(i)}_t(x, y) = ∫ f_{Σm(1-s) - (t-s) m_i}(r - Σx - (y - x_i)) / f_{Σm}(r) ν(dr)`.
pub fn fully_conditioned_marginal_density(spec: &GlpSpec, i: usize, s: f64, x: &[f64], t: f64, y: f64) -> Result<f64> {
    check_coord("fully conditioned marginal density", spec, i)?;
    check_dim("fully conditioned marginal density", spec, x)?;
    fully_conditioned_density_at(spec, i, s, x, t, y, y - x[i])
}

fn fully_conditioned_density_at(spec: &GlpSpec, i: usize, s: f64, x: &[f64], t: f64, y: f64, step: f64) -> Result<f64> {
    const OP: &str = "fully conditioned marginal density";
    check_times(OP, s, t)?;
    check_coord(OP, spec, i)?;
    check_dim(OP, spec, x)?;
    check_support(OP, spec, &[y])?;
    let (s, t) = (cap_time(OP, s, spec.eps())?, cap_time(OP, t, spec.eps())?);
    let total = spec.total_activity();
    let mi = spec.activity().m()[i];
    let sx: f64 = x.iter().sum();
    let ln = checked_log_norm(OP, spec, s, sx)?;
    let lf = spec.family().log_density((t - s) * mi, step);
    if lf == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let lh = spec.theta().log_h(total * (1.0 - s) - (t - s) * mi, sx + step)?;
    Ok((lh + lf - ln).exp())
}

/// CDF companion of [`fully_conditioned_marginal_density`].
pub fn fully_conditioned_marginal_cdf(spec: &GlpSpec, i: usize, s: f64, x: &[f64], t: f64, y: f64) -> Result<f64> {
    const OP: &str = "fully conditioned marginal density";
    check_times(OP, s, t)?;
    check_coord(OP, spec, i)?;
    check_dim(OP, spec, x)?;
    let (s, t) = (cap_time(OP, s, spec.eps())?, cap_time(OP, t, spec.eps())?);
    let total = spec.total_activity();
    let mi = spec.activity().m()[i];
    let sx: f64 = x.iter().sum();
    let post = spec.theta().posterior(s, sx)?.shifted(x[i] - sx);
    let a = (t - s) * mi;
    mixture_cdf(spec.family(), &post, a, total * (1.0 - s) - a, x[i], y)
}

/// Laws of the sum process `R` given `ξ_s`.
#[derive(Debug, Clone)]
pub struct RProcessLaws<'a> {
    spec: &'a GlpSpec,
    s: f64,
    sum: f64,
    log_norm: f64,
    /// Conditional law of `R_1`.
    pub terminal: GeneratingLaw,
}

/// `R_1 | ξ_s ~ θ_s(dr; Σx) / Θ_s(Σx)`, and the `R`-transition density.
pub fn r_process_laws<'a>(spec: &'a GlpSpec, s: f64, x: &[f64]) -> Result<RProcessLaws<'a>> {
    const OP: &str = "sum-process law";
    check_dim(OP, spec, x)?;
    let s = cap_time(OP, s, spec.eps())?;
    let sum: f64 = x.iter().sum();
    let log_norm = checked_log_norm(OP, spec, s, sum)?;
    Ok(RProcessLaws {
        spec,
        s,
        sum,
        log_norm,
        terminal: spec.theta().posterior(s, sum)?,
    })
}

impl RProcessLaws<'_> {
    /// `Θ_t(r) / Θ_s(Σx) · f_{(t-s) Σm}(r - Σx)`.
    pub fn transition_density(&self, t: f64, r: f64) -> Result<f64> {
        self.density_at(t, r, r - self.sum)
    }

    fn density_at(&self, t: f64, r: f64, step: f64) -> Result<f64> {
        const OP: &str = "sum-process transition density";
        check_times(OP, self.s, t)?;
        check_support(OP, self.spec, &[r])?;
        let t = cap_time(OP, t, self.spec.eps())?;
        let fam = self.spec.family();
        let lf = fam.log_density((t - self.s) * self.spec.total_activity(), step);
        if lf == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok((self.spec.theta().log_big_theta(t, r)? + lf - self.log_norm).exp())
    }

    pub fn transition_cdf(&self, t: f64, r: f64) -> Result<f64> {
        check_times("sum-process transition density", self.s, t)?;
        let total = self.spec.total_activity();
        mixture_cdf(
            self.spec.family(),
            &self.terminal,
            (t - self.s) * total,
            (1.0 - t) * total,
            self.sum,
            r,
        )
    }

    /// Range of `R_t` for quadrature.
    pub fn transition_range(&self, t: f64) -> StateRange {
        self.spec.theta().increment_range(self.s, self.sum, t).shifted(self.sum)
    }
}

/// `E(R_t | ξ_s = x) = (1-t)/(1-s) Σx + (t-s)/(1-s) E(R_1 | ξ_s = x)`, `t <= 1`.
pub fn conditional_mean_r(spec: &GlpSpec, s: f64, x: &[f64], t: f64) -> Result<f64> {
    const OP: &str = "conditional mean of R";
    spec.require_integrable(OP)?;
    check_dim(OP, spec, x)?;
    if !(0.0 <= s && s <= t && t <= 1.0 && s < 1.0) {
        return Err(GlpError::Horizon {
            op: OP,
            t,
            range: "0 <= s <= t <= 1, s < 1",
        });
    }
    let sum: f64 = x.iter().sum();
    if t == s {
        return Ok(sum);
    }
    let e1 = spec.theta().posterior_mean(s, sum)?;
    Ok((1.0 - t) / (1.0 - s) * sum + (t - s) / (1.0 - s) * e1)
}

/// `E(ξ^{(i)}_1 | ξ_s = x) = x_i + (m_i / Σm)(E(R_1 | ξ_s = x) - Σx)` for all `i`.
pub fn conditional_mean_coords(spec: &GlpSpec, s: f64, x: &[f64]) -> Result<Vec<f64>> {
    const OP: &str = "conditional terminal mean";
    spec.require_integrable(OP)?;
    check_dim(OP, spec, x)?;
    let sum: f64 = x.iter().sum();
    let gap = spec.theta().posterior_mean(s, sum)? - sum;
    Ok(x.iter()
        .zip(spec.activity().shares())
        .map(|(xi, p)| xi + p * gap)
        .collect())
}

/// Law of `R_t - R_s` given the path up to `s` (which enters through `R_s`).
pub fn conditional_generating_law(spec: &GlpSpec, s: f64, r_s: f64, t: f64) -> Result<GeneratingLaw> {
    spec.theta().increment_law(s, r_s, t)
}

/// Quadrature range for coordinate `i` at `t` given `ξ_s = x`.
pub(crate) fn coord_range(spec: &GlpSpec, i: usize, s: f64, x: &[f64], t: f64) -> Result<StateRange> {
    let total = spec.total_activity();
    let mi = spec.activity().m()[i];
    let sx: f64 = x.iter().sum();
    let a = (t - s) * mi;
    let b = total * (1.0 - s) - a;
    let post = spec.theta().posterior(s, sx)?;
    let fam = spec.family();
    Ok(match *fam {
        DensityFamily::Poisson => {
            let top = post.atoms().last().map_or(sx, |at| at.location);
            StateRange::Lattice {
                lo: x[i].round() as i64,
                hi: (x[i] + (top - sx)).round() as i64,
            }
        }
        DensityFamily::Brownian { sigma } => {
            let mut l = gaussian_layout(x[i], sigma * a.sqrt());
            let sd = sigma * (a * b / (a + b)).sqrt();
            for at in post.atoms() {
                let mean = x[i] + (at.location - sx) * a / (a + b);
                l.breaks.extend((-6..=6).map(|k| mean + k as f64 * sd));
            }
            StateRange::Line(l.normalise())
        }
        DensityFamily::Gamma | DensityFamily::StableHalf { .. } => {
            let sc = fam.scale(a);
            let mut breaks = vec![x[i], x[i] + sc, x[i] + 10.0 * sc];
            breaks.extend(post.atoms().iter().map(|at| x[i] + at.location - sx));
            let bounded = post.continuous().is_none();
            let top = x[i] + post.atoms().last().map_or(0.0, |at| at.location - sx);
            let mut l = Layout {
                breaks,
                left_tail: false,
                right_tail: !bounded,
                rule: Rule::EndpointSingular,
            }
            .normalise();
            if bounded {
                l = l.clip(x[i], top);
            }
            StateRange::Line(l)
        }
    })
}

/// Range of coordinate `i` at `t` given only its own value `x` at `s`.
pub(crate) fn marginal_range(spec: &GlpSpec, i: usize, s: f64, x: f64, t: f64) -> Result<StateRange> {
    let total = spec.total_activity();
    let mi = spec.activity().m()[i];
    let post = spec.theta().posterior_rem(total - s * mi, x)?;
    let (a, b) = ((t - s) * mi, total - t * mi);
    let fam = spec.family();
    Ok(match *fam {
        DensityFamily::Poisson => StateRange::Lattice {
            lo: x.round() as i64,
            hi: post.atoms().last().map_or(x, |at| at.location).round() as i64,
        },
        DensityFamily::Brownian { sigma } => {
            let mut l = gaussian_layout(x, sigma * a.sqrt());
            let sd = sigma * (a * b / (a + b)).sqrt();
            for at in post.atoms() {
                let mean = x + (at.location - x) * a / (a + b);
                l.breaks.extend((-6..=6).map(|k| mean + k as f64 * sd));
            }
            StateRange::Line(l.normalise())
        }
        DensityFamily::Gamma | DensityFamily::StableHalf { .. } => {
            let sc = fam.scale(a);
            let mut breaks = vec![x, x + sc, x + 10.0 * sc];
            breaks.extend(post.atoms().iter().map(|at| at.location));
            let bounded = post.continuous().is_none();
            let top = post.atoms().last().map_or(x, |at| at.location);
            let mut l = Layout {
                breaks,
                left_tail: false,
                right_tail: !bounded,
                rule: Rule::EndpointSingular,
            }
            .normalise();
            if bounded {
                l = l.clip(x, top);
            }
            StateRange::Line(l)
        }
    })
}

/// Total mass of a transition law, by quadrature (or summation on the
/// lattice). The joint law is supported for `n <= 2` only.
pub fn transition_mass(spec: &GlpSpec, query: MassQuery, s: f64, x: &[f64], t: f64) -> Result<f64> {
    if query != MassQuery::Terminal {
        check_times("transition mass", s, t)?;
    }
    check_dim("transition mass", spec, x)?;
    match query {
        MassQuery::Joint => match spec.n() {
            1 => coord_range(spec, 0, s, x, t)?
                .integrate(|p| joint_density_at(spec, s, x, t, &[p.x], &[p.offset_from(x[0])]).unwrap_or(0.0)),
            2 => {
                let outer = coord_range(spec, 0, s, x, t)?;
                let inner = coord_range(spec, 1, s, x, t)?;
                // The inner rule runs tighter than the outer one so its
                // error does not read as non-convergence outside.
                let atoms: Vec<f64> = spec.theta().posterior(s, x.iter().sum())?.atoms().iter().map(|a| a.location).collect();
                let sx: f64 = x.iter().sum();
                outer.integrate_tol(
                    |p| {
                        // Θ_t(Σy) has kinks where Σy crosses an atom of ν;
                        // split the inner range there.
                        let inner = match &inner {
                            StateRange::Line(l) => {
                                let mut l = l.clone();
                                let lo = l.breaks.first().copied().unwrap_or(x[1]);
                                let hi = l.breaks.last().copied().unwrap_or(x[1]);
                                l.breaks.extend(
                                    atoms
                                        .iter()
                                        .map(|r| x[1] + (r - sx) - p.offset_from(x[0]))
                                        .filter(|b| (lo..=hi).contains(b) || l.right_tail && *b > lo),
                                );
                                StateRange::Line(l.normalise())
                            }
                            lattice => lattice.clone(),
                        };
                        inner
                            .integrate_tol(
                                |q| {
                                    let steps = [p.offset_from(x[0]), q.offset_from(x[1])];
                                    joint_density_at(spec, s, x, t, &[p.x, q.x], &steps).unwrap_or(0.0)
                                },
                                1e-12,
                            )
                            .unwrap_or(f64::NAN)
                    },
                    1e-8,
                )
            }
            n => Err(GlpError::unsupported(
                "transition mass",
                format!("joint quadrature is limited to n <= 2, got n = {n}"),
            )),
        },
        MassQuery::Marginal(i) => {
            check_coord("transition mass", spec, i)?;
            marginal_range(spec, i, s, x[i], t)?
                .integrate(|p| marginal_density_at(spec, i, s, x[i], t, p.x, p.offset_from(x[i])).unwrap_or(0.0))
        }
        MassQuery::FullyConditioned(i) => {
            check_coord("transition mass", spec, i)?;
            coord_range(spec, i, s, x, t)?
                .integrate(|p| fully_conditioned_density_at(spec, i, s, x, t, p.x, p.offset_from(x[i])).unwrap_or(0.0))
        }
        MassQuery::Terminal => {
            let law = terminal_transition_law(spec, s, x)?;
            let head = spec.n() - 1;
            match head {
                1 => coord_range(spec, 0, s, x, 1.0)?
                    .integrate(|p| law.probability(&[p.x], &StateSet::All).unwrap_or(0.0)),
                n => Err(GlpError::unsupported(
                    "transition mass",
                    format!("terminal quadrature needs n = 2, got n = {}", n + 1),
                )),
            }
        }
        MassQuery::Sum => {
            let laws = r_process_laws(spec, s, x)?;
            let sum: f64 = x.iter().sum();
            laws.transition_range(t)
                .integrate(|p| laws.density_at(t, p.x, p.offset_from(sum)).unwrap_or(0.0))
        }
    }
}

/// Which transition law [`transition_mass`] integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassQuery {
    Joint,
    Marginal(usize),
    FullyConditioned(usize),
    /// The law of `ξ_1` given `ξ_s` (`n = 2`).
    Terminal,
    Sum,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::BridgeEndpoint;
    use crate::kernels::bridge_transition_density;

    const BM: DensityFamily = DensityFamily::Brownian { sigma: 1.0 };

    fn two_point(m: Vec<f64>) -> GlpSpec {
        GlpSpec::new(BM, GeneratingLaw::from_pairs(&[(-2.0, 0.5), (2.0, 0.5)]).unwrap(), m).unwrap()
    }

    #[test]
    fn dirac_joint_factorises_into_bridges() {
        // With ν = δ_z the joint transition equals the product of the
        // coordinate bridges pinned by the remaining free increments.
        let spec = GlpSpec::new(BM, GeneratingLaw::dirac(1.0), vec![1.0, 1.0]).unwrap();
        let (s, t) = (0.2, 0.6);
        let x = [0.1, -0.3];
        let y = [0.4, 0.2];
        let v = glp_transition_density(&spec, s, &x, t, &y).unwrap();
        // Oracle: master bridge on [0, 2] pinned at 1; block increments are
        // independent given the sum, so the density is the bridge density of
        // the master process through the two block times.
        let f = |h: f64, d: f64| BM.density(h, d).unwrap();
        let want = f(0.4, y[0] - x[0]) * f(0.4, y[1] - x[1]) * f(0.8, 1.0 - y[0] - y[1])
            / f(1.6, 1.0 - x[0] - x[1]);
        assert!((v - want).abs() < 1e-12 * want);
    }

    #[test]
    fn terminal_law_poisson_binomial() {
        let spec = GlpSpec::new(DensityFamily::Poisson, GeneratingLaw::dirac(2.0), vec![1.0, 3.0]).unwrap();
        let law = terminal_transition_law(&spec, 0.0, &[0.0, 0.0]).unwrap();
        let p: f64 = 0.25;
        for k in 0..=2u32 {
            let want = [1.0, 2.0, 1.0][k as usize] * p.powi(k as i32) * (1.0 - p).powi(2 - k as i32);
            let got = law.probability(&[k as f64], &StateSet::All).unwrap();
            assert!((got - want).abs() < 1e-14, "k={k}: {got} vs {want}");
            let pmf = law.density(&[k as f64, 2.0 - k as f64]).unwrap();
            assert!((pmf - want).abs() < 1e-14);
        }
    }

    #[test]
    fn marginal_n1_is_lrb() {
        let spec = two_point(vec![2.0]);
        let lrb = crate::lrb::LrbSpec::new(BM, spec.law().clone(), 2.0).unwrap();
        let a = marginal_transition_density(&spec, 0, 0.25, 0.3, 0.5, -0.1).unwrap();
        let b = lrb.transition_density(0.5, 0.3, 1.0, -0.1).unwrap();
        assert!((a - b).abs() < 1e-13 * b);
    }

    #[test]
    fn fully_conditioned_dirac_is_bridge() {
        let spec = GlpSpec::new(BM, GeneratingLaw::dirac(1.0), vec![1.0, 2.0]).unwrap();
        let x = [0.2, 0.1];
        let v = fully_conditioned_marginal_density(&spec, 0, 0.3, &x, 0.7, 0.5).unwrap();
        // Coordinate 0 moves over 0.4 of activity inside a master bridge that
        // still has 2.1 to run and must cover 1 - 0.3 = 0.7.
        let end = BridgeEndpoint::new(&BM, 2.1, 0.7).unwrap();
        let want = bridge_transition_density(&BM, 0.0, 0.4, &end, 0.0, 0.3).unwrap();
        assert!((v - want).abs() < 1e-12 * want);
    }

    #[test]
    fn conditional_mean_examples() {
        let spec = GlpSpec::new(BM, GeneratingLaw::dirac(1.0), vec![1.0, 1.0]).unwrap();
        assert!((conditional_mean_r(&spec, 0.0, &[0.0, 0.0], 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(conditional_mean_r(&spec, 0.3, &[0.2, 0.1], 0.3).unwrap(), 0.2 + 0.1);
        let st = GlpSpec::new(DensityFamily::StableHalf { c: 1.0 }, GeneratingLaw::dirac(1.0), vec![1.0]).unwrap();
        assert!(matches!(
            conditional_mean_r(&st, 0.0, &[0.0], 0.5),
            Err(GlpError::Integrability { .. })
        ));
    }

    #[test]
    fn normalisations() {
        let spec = two_point(vec![1.0, 2.0]);
        let x = [0.3, -0.5];
        for q in [MassQuery::Joint, MassQuery::Marginal(1), MassQuery::FullyConditioned(0), MassQuery::Sum] {
            let m = transition_mass(&spec, q, 0.2, &x, 0.55).unwrap();
            assert!((m - 1.0).abs() < 1e-6, "{q:?}: {m}");
        }
    }
}
