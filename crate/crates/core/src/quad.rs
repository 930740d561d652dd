//! Numerical integration and root bracketing.
//!
//! Two rules are provided. Adaptive Gauss–Kronrod (7/15 points, global
//! error-driven bisection) handles smooth integrands on finite panels.
//! Tanh–sinh and exp–sinh handle panels whose endpoints carry integrable
//! singularities, such as gamma densities with shape below one. The
//! double-exponential rules hand the integrand the exact distance to each
//! panel endpoint so that singular factors can be evaluated without
//! cancellation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{GlpError, Result};

/// Default absolute tolerance for every integral in the crate.
pub const ABS_TOL: f64 = 1e-9;

/// Integrand values below this fraction of the observed peak are treated
/// as zero when truncating infinite domains.
pub const TAIL_CUTOFF: f64 = 1e-15;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for GK_NODES[1], [3], [5], [7].
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// A point handed to an integrand, together with its exact distance to the
/// endpoints of the panel being integrated.
#[derive(Debug, Clone, Copy)]
pub struct Pt {
    pub x: f64,
    pub lo: f64,
    pub hi: f64,
    /// `x - lo`, exact even when `x` rounds to `lo`.
    pub da: f64,
    /// `hi - x`, exact even when `x` rounds to `hi`.
    pub db: f64,
}

impl Pt {
    pub fn plain(x: f64) -> Self {
        Pt {
            x,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            da: f64::INFINITY,
            db: f64::INFINITY,
        }
    }

    /// `x - base`, using the exact endpoint distance when `base` is an
    /// endpoint of the panel.
    #[inline]
    pub fn offset_from(&self, base: f64) -> f64 {
        if base == self.lo {
            self.da
        } else if base == self.hi {
            -self.db
        } else {
            self.x - base
        }
    }

    /// `target - x`, exact when `target` is a panel endpoint.
    #[inline]
    pub fn offset_to(&self, target: f64) -> f64 {
        if target == self.hi {
            self.db
        } else if target == self.lo {
            -self.da
        } else {
            target - self.x
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(&Pt) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let eval = |x: f64| {
        f(&Pt {
            x,
            lo: a,
            hi: b,
            da: x - a,
            db: b - x,
        })
    };
    let fc = eval(c);
    let mut kronrod = fc * GK_WEIGHTS[7];
    let mut gauss = fc * G_WEIGHTS[3];
    for j in 0..7 {
        let dx = h * GK_NODES[j];
        let pair = eval(c - dx) + eval(c + dx);
        kronrod += GK_WEIGHTS[j] * pair;
        if j % 2 == 1 {
            gauss += G_WEIGHTS[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Adaptive Gauss–Kronrod over `[a, b]`, refining the worst segment until
/// the summed error estimate drops below `tol`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    gauss_kronrod_pt(|p: &Pt| f(p.x), a, b, tol)
}

pub fn gauss_kronrod_pt<F: Fn(&Pt) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    gauss_kronrod_panels(&f, &[a, b], tol)
}

/// Gauss–Kronrod with the initial partition given by `breaks`.
pub fn gauss_kronrod_panels<F: Fn(&Pt) -> f64>(f: &F, breaks: &[f64], tol: f64) -> Result<Estimate> {
    const MAX_SEGMENTS: usize = 4000;
    if breaks.len() < 2 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let s = gk15(f, w[0], w[1]);
        value += s.value;
        error += s.error;
        heap.push(s);
    }
    let mut count = heap.len();
    while error > tol.max(1e-13 * value.abs()) && count < MAX_SEGMENTS {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    if !value.is_finite() {
        return Err(GlpError::Numerical {
            op: "gauss_kronrod",
            detail: "non-finite integrand".into(),
        });
    }
    Ok(Estimate { value, error })
}

/// Tanh–sinh quadrature over a finite panel `[a, b]`. The integrand sees
/// exact endpoint distances, so algebraic endpoint singularities are
/// integrated to full precision. Panels that fail to converge are bisected.
pub fn tanh_sinh<F: Fn(&Pt) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    tanh_sinh_rec(f, a, b, tol, 0)
}

fn tanh_sinh_rec<F: Fn(&Pt) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<Estimate> {
    if b <= a {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    match tanh_sinh_panel(f, a, b, tol) {
        Some(est) => Ok(est),
        None if depth < 12 => {
            let mid = 0.5 * (a + b);
            let l = tanh_sinh_rec(f, a, mid, 0.5 * tol, depth + 1)?;
            let r = tanh_sinh_rec(f, mid, b, 0.5 * tol, depth + 1)?;
            Ok(Estimate {
                value: l.value + r.value,
                error: l.error + r.error,
            })
        }
        None => Err(GlpError::Numerical {
            op: "tanh_sinh",
            detail: format!("no convergence on [{a}, {b}]"),
        }),
    }
}

const TS_TMAX: f64 = 6.0;
const TS_MAX_LEVEL: u32 = 8;

fn tanh_sinh_panel<F: Fn(&Pt) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Option<Estimate> {
    let d = 0.5 * (b - a);
    // Contribution of the symmetric node pair at abscissa parameter t.
    let pair = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let e2u = (2.0 * u).exp();
        // 1 - tanh(u), computed without cancellation.
        let comp = 2.0 / (1.0 + e2u);
        let dist = d * comp;
        let cu = u.cosh();
        let w = d * FRAC_PI_2 * t.cosh() / (cu * cu);
        if !(dist > 0.0) || w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let left = Pt {
            x: a + dist,
            lo: a,
            hi: b,
            da: dist,
            db: 2.0 * d - dist,
        };
        let right = Pt {
            x: b - dist,
            lo: a,
            hi: b,
            da: 2.0 * d - dist,
            db: dist,
        };
        // A node that rounds onto an endpoint may hit a singularity the
        // integrand cannot resolve; its true mass is negligible.
        let resolved = |p: &Pt| {
            let v = f(p);
            if v.is_finite() || (p.x != a && p.x != b) {
                v
            } else {
                0.0
            }
        };
        w * (resolved(&left) + resolved(&right))
    };
    let centre = d
        * FRAC_PI_2
        * f(&Pt {
            x: a + d,
            lo: a,
            hi: b,
            da: d,
            db: d,
        });
    // Integrands that see only `x` cannot resolve offsets from a far-off
    // endpoint below one ulp, so demand no more than that resolution.
    let floor = 1e-14_f64.max(8.0 * f64::EPSILON * (a.abs() + b.abs()) / (b - a));
    let mut h = 1.0;
    let mut sum = centre;
    let mut j = 1;
    while (j as f64) * h <= TS_TMAX {
        sum += pair(j as f64 * h);
        j += 1;
    }
    let mut prev = sum * h;
    for level in 1..=TS_MAX_LEVEL {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while (k as f64) * h <= TS_TMAX {
            add += pair(k as f64 * h);
            k += 2;
        }
        sum += add;
        let cur = sum * h;
        if !cur.is_finite() {
            return None;
        }
        let err = (cur - prev).abs();
        if level >= 3 && err <= tol.max(floor * cur.abs()) {
            return Some(Estimate {
                value: cur,
                error: err,
            });
        }
        prev = cur;
    }
    None
}

/// Exp–sinh quadrature over `[a, ∞)` (or `(-∞, a]` when `mirror`), for
/// integrands that decay at least algebraically.
pub fn exp_sinh<F: Fn(&Pt) -> f64>(f: &F, a: f64, mirror: bool, tol: f64) -> Result<Estimate> {
    const T_LO: f64 = -6.0;
    const T_HI: f64 = 4.5;
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let dist = u.exp();
        let w = FRAC_PI_2 * t.cosh() * dist;
        if !(dist > 0.0) || !dist.is_finite() || !w.is_finite() {
            return 0.0;
        }
        let p = if mirror {
            Pt {
                x: a - dist,
                lo: f64::NEG_INFINITY,
                hi: a,
                da: f64::INFINITY,
                db: dist,
            }
        } else {
            Pt {
                x: a + dist,
                lo: a,
                hi: f64::INFINITY,
                da: dist,
                db: f64::INFINITY,
            }
        };
        let v = f(&p);
        if v == 0.0 {
            0.0
        } else {
            w * v
        }
    };
    let mut h = 0.5;
    let mut sum = 0.0;
    let mut t = T_LO;
    while t <= T_HI {
        sum += node(t);
        t += h;
    }
    let mut prev = sum * h;
    for level in 1..=9 {
        h *= 0.5;
        let mut add = 0.0;
        let mut t = T_LO + h;
        while t <= T_HI {
            add += node(t);
            t += 2.0 * h;
        }
        sum += add;
        let cur = sum * h;
        if !cur.is_finite() {
            break;
        }
        let err = (cur - prev).abs();
        if level >= 3 && err <= tol.max(1e-14 * cur.abs()) {
            return Ok(Estimate {
                value: cur,
                error: err,
            });
        }
        prev = cur;
    }
    Err(GlpError::Numerical {
        op: "exp_sinh",
        detail: format!("no convergence on tail from {a}"),
    })
}

/// Which rule to apply on the interior panels of a [`Layout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Smooth integrand: adaptive Gauss–Kronrod.
    Smooth,
    /// Possible integrable singularities at panel endpoints: tanh–sinh.
    EndpointSingular,
}

/// A partition of (part of) the real line into panels, with optional
/// infinite tails beyond the first and last break.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub breaks: Vec<f64>,
    pub left_tail: bool,
    pub right_tail: bool,
    pub rule: Rule,
}

impl Layout {
    pub fn finite(lo: f64, hi: f64, rule: Rule) -> Self {
        Layout {
            breaks: vec![lo, hi],
            left_tail: false,
            right_tail: false,
            rule,
        }
    }

    /// Sorts and deduplicates the breaks.
    pub fn normalise(mut self) -> Self {
        self.breaks.retain(|b| b.is_finite());
        self.breaks.sort_by(f64::total_cmp);
        self.breaks.dedup();
        self
    }

    /// Keeps only the part of the layout inside `[lo, hi]`.
    pub fn clip(mut self, lo: f64, hi: f64) -> Self {
        if lo.is_finite() {
            self.breaks.retain(|&b| b >= lo);
            self.breaks.push(lo);
            self.left_tail = false;
        }
        if hi.is_finite() {
            self.breaks.retain(|&b| b <= hi);
            self.breaks.push(hi);
            self.right_tail = false;
        }
        self.normalise()
    }

    /// Integrates `f` over the layout.
    pub fn integrate<F: Fn(&Pt) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        let b = &self.breaks;
        if b.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        let panels = b.len().saturating_sub(1).max(1);
        let panel_tol = tol / (panels as f64 + 2.0);
        match self.rule {
            Rule::Smooth => {
                if b.len() >= 2 {
                    total += gauss_kronrod_panels(&f, b, tol / 2.0)?.value;
                }
            }
            Rule::EndpointSingular => {
                for w in b.windows(2) {
                    total += tanh_sinh(&f, w[0], w[1], panel_tol)?.value;
                }
            }
        }
        if self.left_tail {
            total += self.tail(&f, b[0], true, panel_tol)?;
        }
        if self.right_tail {
            total += self.tail(&f, b[b.len() - 1], false, panel_tol)?;
        }
        Ok(total)
    }

    fn tail<F: Fn(&Pt) -> f64>(&self, f: &F, from: f64, mirror: bool, tol: f64) -> Result<f64> {
        match self.rule {
            Rule::EndpointSingular => Ok(exp_sinh(f, from, mirror, tol)?.value),
            Rule::Smooth => {
                // Truncate where the integrand falls below the cutoff
                // relative to the largest value seen.
                let mut pts = self.walk(f, from, mirror);
                pts.sort_by(f64::total_cmp);
                Ok(gauss_kronrod_panels(f, &pts, tol)?.value)
            }
        }
    }

    /// Breaks with any infinite tails replaced by finite truncation points
    /// found by walking outward until `f` is negligible.
    pub fn truncated_breaks<F: Fn(&Pt) -> f64>(&self, f: &F) -> Vec<f64> {
        let mut out = self.breaks.clone();
        if out.is_empty() {
            return out;
        }
        if self.left_tail {
            let pts = self.walk(f, out[0], true);
            out.extend(pts);
        }
        if self.right_tail {
            let pts = self.walk(f, out[out.len() - 1], false);
            out.extend(pts);
        }
        out.retain(|b| b.is_finite());
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn walk<F: Fn(&Pt) -> f64>(&self, f: &F, from: f64, mirror: bool) -> Vec<f64> {
        let g = |x: f64| f(&Pt::plain(x)).abs();
        let mut peak = g(from);
        let mut step = self.typical_width();
        let mut edge = from;
        let mut pts = vec![from];
        for _ in 0..200 {
            edge = if mirror { edge - step } else { edge + step };
            let v = g(edge);
            peak = peak.max(v);
            pts.push(edge);
            if v <= TAIL_CUTOFF * peak && g(if mirror { edge - step } else { edge + step }) <= TAIL_CUTOFF * peak {
                break;
            }
            step *= 1.5;
        }
        pts
    }

    fn panel<F: Fn(&Pt) -> f64>(&self, f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
        Ok(match self.rule {
            Rule::Smooth => gauss_kronrod_panels(f, &[a, b], tol)?.value,
            Rule::EndpointSingular => tanh_sinh(f, a, b, tol)?.value,
        })
    }

    /// The point `y` with `∫_{-∞}^{y} f = u ∫ f`, for a nonnegative `f`
    /// and `u` in `[0, 1]`. Bisection stops at relative width `1e-12`.
    pub fn quantile<F: Fn(&Pt) -> f64>(&self, f: &F, u: f64) -> Result<f64> {
        let b = self.truncated_breaks(f);
        if b.len() < 2 {
            return b.first().copied().ok_or_else(|| GlpError::Numerical {
                op: "quantile",
                detail: "empty layout".into(),
            });
        }
        let masses = b
            .windows(2)
            .map(|w| self.panel(f, w[0], w[1], 1e-14))
            .collect::<Result<Vec<f64>>>()?;
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(GlpError::Numerical {
                op: "quantile",
                detail: "integrand has no mass".into(),
            });
        }
        let target = u.clamp(0.0, 1.0) * total;
        let mut acc = 0.0;
        let last = masses.len() - 1;
        for (k, w) in b.windows(2).enumerate() {
            if acc + masses[k] < target && k < last {
                acc += masses[k];
                continue;
            }
            let (mut lo, mut hi) = (w[0], w[1]);
            let mut f_lo = acc;
            let width_tol = 1e-12 * (lo.abs().max(hi.abs()).max(hi - lo));
            while hi - lo > width_tol {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let f_mid = f_lo + self.panel(f, lo, mid, 1e-15)?;
                if f_mid < target {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        Ok(b[b.len() - 1])
    }

    fn typical_width(&self) -> f64 {
        let b = &self.breaks;
        let w = if b.len() >= 2 {
            b.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
        } else {
            1.0
        };
        if w.is_finite() && w > 0.0 {
            w
        } else {
            1.0
        }
    }
}

/// Bisection for a root of a monotone function on `[lo, hi]` whose values
/// at the ends have opposite signs. Stops when the bracket is narrower
/// than `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(GlpError::Numerical {
            op: "bisect",
            detail: format!("root not bracketed on [{lo}, {hi}]"),
        });
    }
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `log(sum(exp(xs)))` with max subtraction; `-inf` for an empty or
/// all-`-inf` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomial_and_gaussian() {
        let e = gauss_kronrod(|x| x * x, 0.0, 3.0, 1e-12).unwrap();
        assert!((e.value - 9.0).abs() < 1e-12);
        let g = gauss_kronrod(
            |x| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            -12.0,
            12.0,
            1e-12,
        )
        .unwrap();
        assert!((g.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // Beta(0.1, 0.3) kernel on [2, 5] with both singular ends.
        let (a, b) = (0.1, 0.3);
        let f = |p: &Pt| p.da.powf(a - 1.0) * p.db.powf(b - 1.0);
        let e = tanh_sinh(&f, 2.0, 5.0, 1e-12).unwrap();
        let beta = (statrs::function::gamma::ln_gamma(a) + statrs::function::gamma::ln_gamma(b)
            - statrs::function::gamma::ln_gamma(a + b))
        .exp();
        let exact = beta * 3f64.powf(a + b - 1.0);
        assert!((e.value - exact).abs() < 1e-9 * exact, "{} vs {}", e.value, exact);
    }

    #[test]
    fn exp_sinh_heavy_tail() {
        // Lévy density with unit scale integrates to one on (0, ∞).
        let f = |p: &Pt| {
            let x = p.da;
            (0.5 / std::f64::consts::PI).sqrt() * x.powf(-1.5) * (-0.5 / x).exp()
        };
        let e = exp_sinh(&f, 0.0, false, 1e-10).unwrap();
        assert!((e.value - 1.0).abs() < 1e-8, "{}", e.value);
    }

    #[test]
    fn smooth_layout_truncates_tails() {
        let lay = Layout {
            breaks: vec![-1.0, 0.0, 1.0],
            left_tail: true,
            right_tail: true,
            rule: Rule::Smooth,
        };
        let v = lay
            .integrate(
                |p| (-0.5 * (p.x - 3.0).powi(2)).exp() / (2.0 * std::f64::consts::PI).sqrt(),
                1e-10,
            )
            .unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn quantile_inverts_gaussian_and_beta() {
        let lay = Layout {
            breaks: vec![-1.0, 0.0, 1.0],
            left_tail: true,
            right_tail: true,
            rule: Rule::Smooth,
        };
        let phi = |p: &Pt| (-0.5 * p.x * p.x).exp();
        let q = lay.quantile(&phi, 0.975).unwrap();
        assert!((q - 1.959_963_984_540_054).abs() < 1e-8, "{q}");
        // Beta(1/2, 1/2): F(y) = (2/pi) asin(sqrt(y)).
        let arc = |p: &Pt| 1.0 / (p.offset_from(0.0) * p.offset_to(1.0)).sqrt();
        let lay = Layout::finite(0.0, 1.0, Rule::EndpointSingular);
        let q = lay.quantile(&arc, 0.1).unwrap();
        let want = (0.05 * std::f64::consts::PI).sin().powi(2);
        assert!((q - want).abs() < 1e-9, "{q} vs {want}");
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-12).is_err());
    }

    #[test]
    fn log_sum_exp_stable() {
        let v = log_sum_exp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
    }
}
