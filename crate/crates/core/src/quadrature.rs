//! Generalized Gauss-Laguerre quadrature and the moments of the fast-µRNA
//! densities.
//!
//! Moments are computed after the substitution `s = δ/r` (quadratic noise)
//! or `s = ηr` (linear noise), which turns them into integrals against
//! `s^a e^{−s}`. For strong binding the integrand's mass moves far away from
//! the bulk of that weight, so the engine also tries rules that are rescaled
//! or remapped to follow the integrand. Every candidate is refined by
//! doubling the order until successive results agree, and the first
//! candidate that converges wins.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::distributions::{ln_rhofast_shape, rho0_law};
use crate::error::{Error, Result};
use crate::params::{DimensionlessParams, NoiseLaw};
use crate::special::ln_gamma;

pub const N_MIN: usize = 16;
pub const N_MAX: usize = 4096;

/// Gauss rule for the weight `s^a e^{−s}` on (0, ∞).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    exponent: f64,
    nodes: Vec<f64>,
    ln_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights; they overflow for very large exponents, where
    /// [`ln_weights`](Self::ln_weights) should be used instead.
    pub fn weights(&self) -> Vec<f64> {
        self.ln_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn ln_weights(&self) -> &[f64] {
        &self.ln_weights
    }

    /// `Σ w_i f(x_i) ≈ ∫ f(s) s^a e^{−s} ds`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.ln_weights)
            .map(|(&x, &lw)| lw.exp() * f(x))
            .sum()
    }
}

/// Builds the `n`-point rule for `s^a e^{−s}`: nodes are eigenvalues of the
/// Jacobi matrix, polished by Newton steps on the Laguerre recurrence.
pub fn laguerre_rule(n: usize, a: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::invalid("N", "order must be at least 1"));
    }
    if !(a > -1.0) || !a.is_finite() {
        return Err(Error::Domain {
            op: "laguerre_rule",
            value: a,
        });
    }
    let mut diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + a + 1.0).collect();
    let mut off: Vec<f64> = (1..n)
        .map(|k| (k as f64 * (k as f64 + a)).sqrt())
        .chain(std::iter::once(0.0))
        .collect();
    tridiagonal_eigenvalues(&mut diag, &mut off)?;
    diag.sort_by(f64::total_cmp);

    let nf = n as f64;
    let ln_const = ln_gamma(nf + a + 1.0) - ln_gamma(nf + 1.0);
    let mut nodes = Vec::with_capacity(n);
    let mut ln_weights = Vec::with_capacity(n);
    for mut x in diag {
        // Cheap double-precision steps first, then one refined step.
        for _ in 0..4 {
            match newton_step(n, a, x, laguerre_pair_f64(n, a, x)) {
                Some((next, step)) => {
                    x = next;
                    if step.abs() <= 1e-8 * x {
                        break;
                    }
                }
                None => break,
            }
        }
        // Final step in double-double. The weight uses L_n', which is
        // smooth at the roots, carried to the updated node to first order
        // with L_n'' from the Laguerre equation.
        let (ln, ln1, scale) = laguerre_pair(n, a, x);
        let (ln, ln1) = (ln.to_f64(), ln1.to_f64());
        let mut deriv = (nf * ln - (nf + a) * ln1) / x;
        if let Some((next, step)) = newton_step(n, a, x, (ln, ln1)) {
            let second = -((a + 1.0 - x) * deriv + nf * ln) / x;
            deriv -= second * step;
            x = next;
        }
        nodes.push(x);
        ln_weights.push(ln_const - x.ln() - 2.0 * (deriv.abs().ln() + scale));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes[0] <= 0.0 {
        return Err(Error::Convergence {
            max_order: n,
            last: nodes[0],
            previous: f64::NAN,
        });
    }
    Ok(QuadratureRule {
        order: n,
        exponent: a,
        nodes,
        ln_weights,
    })
}

/// Newton update for a root of `L_n`, using `x L_n' = n L_n − (n+a) L_{n−1}`.
fn newton_step(n: usize, a: f64, x: f64, (ln, ln1): (f64, f64)) -> Option<(f64, f64)> {
    let nf = n as f64;
    let step = x * ln / (nf * ln - (nf + a) * ln1);
    let next = x - step;
    (step.is_finite() && next > 0.0).then_some((next, step))
}

/// Plain double version of [`laguerre_pair`], without the scale.
fn laguerre_pair_f64(n: usize, a: f64, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            cur *= 1e-150;
            prev *= 1e-150;
        }
    }
    if n == 1 {
        (cur, 1.0)
    } else {
        (cur, prev)
    }
}

/// Double-double number `hi + lo`; the Laguerre recurrence loses too many
/// digits near the smallest roots of large-order polynomials otherwise.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let lo = s.lo + self.lo + o.lo;
        Dd::two_sum(s.hi, lo)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    /// Veltkamp split into two 26-bit halves.
    fn split(a: f64) -> (f64, f64) {
        let t = 134_217_729.0 * a;
        let hi = t - (t - a);
        (hi, a - hi)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let (ah, al) = Dd::split(self.hi);
        let (bh, bl) = Dd::split(o.hi);
        let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
        Dd::two_sum(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn scale(self, f: f64) -> Dd {
        self.mul(Dd::from(f))
    }

    fn div_f64(self, d: f64) -> Dd {
        let q = self.hi / d;
        let r = self.add(Dd::from(d).scale(q).neg());
        Dd::two_sum(q, r.hi / d)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `(L_n^{(a)}(x), L_{n−1}^{(a)}(x))` divided by `e^{scale}`, evaluated in
/// double-double arithmetic.
fn laguerre_pair(n: usize, a: f64, x: f64) -> (Dd, Dd, f64) {
    const BIG: f64 = 1e150;
    // Exact power of two, so rescaling introduces no rounding.
    const SHRINK: f64 = 1.0 / (1u128 << 100) as f64 / (1u128 << 100) as f64 / (1u128 << 100) as f64;
    let minus_x = Dd::from(x).neg();
    let mut prev = Dd::from(1.0);
    let mut cur = Dd::from(1.0).add(Dd::from(a)).add(minus_x);
    let mut scale = 0.0;
    for k in 1..n {
        let kf = k as f64;
        let c1 = Dd::from(2.0 * kf + 1.0).add(Dd::from(a)).add(minus_x);
        let c2 = Dd::from(kf).add(Dd::from(a));
        let next = c1.mul(cur).add(c2.mul(prev).neg()).div_f64(kf + 1.0);
        prev = cur;
        cur = next;
        if cur.hi.abs() > BIG {
            cur = cur.scale(SHRINK);
            prev = prev.scale(SHRINK);
            scale -= SHRINK.ln();
        }
    }
    (cur, prev, scale)
}

fn pythag(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m > 1e150 || (m < 1e-150 && m > 0.0) {
        a.hypot(b)
    } else {
        (a * a + b * b).sqrt()
    }
}

/// Implicit QL on a symmetric tridiagonal matrix. `off[i]` couples rows
/// `i` and `i+1`; on return `diag` holds the eigenvalues.
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) -> Result<()> {
    let n = diag.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Convergence {
                    max_order: n,
                    last: diag[l],
                    previous: off[l],
                });
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = pythag(g, 1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * off[i];
                let b = c * off[i];
                r = pythag(f, g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

type RuleCache = Mutex<HashMap<(usize, u64), Arc<QuadratureRule>>>;

const CACHE_LIMIT: usize = 4096;

/// Memoized [`laguerre_rule`], shared across threads.
pub fn cached_rule(n: usize, a: f64) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (n, a.to_bits());
    if let Some(rule) = cache.lock().unwrap().get(&key) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(laguerre_rule(n, a)?);
    let mut map = cache.lock().unwrap();
    if map.len() >= CACHE_LIMIT {
        map.clear();
    }
    map.insert(key, Arc::clone(&rule));
    Ok(rule)
}

/// Mass, first and second moment of an unnormalized density, each equal to
/// the stored value times `e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTriple {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub log_scale: f64,
    /// `Var/mean²` accumulated as a centred sum, when available.
    centred_cv2: Option<f64>,
}

impl MomentTriple {
    pub fn new(m0: f64, m1: f64, m2: f64) -> Result<Self> {
        Self::with_scale(m0, m1, m2, 0.0)
    }

    pub fn with_scale(m0: f64, m1: f64, m2: f64, log_scale: f64) -> Result<Self> {
        if !(m0 > 0.0) || !(m1 >= 0.0) || !(m2 >= 0.0) || !log_scale.is_finite() {
            return Err(Error::invalid("moments", "need m0 > 0 and m1, m2 >= 0"));
        }
        Ok(Self {
            m0,
            m1,
            m2,
            log_scale,
            centred_cv2: None,
        })
    }

    pub fn ln_m0(&self) -> f64 {
        self.m0.ln() + self.log_scale
    }

    pub fn mean(&self) -> f64 {
        self.m1 / self.m0
    }
}

/// `CV = (m2·m0/m1² − 1)^{1/2}`.
pub fn cv_from_moments(mt: &MomentTriple) -> Result<f64> {
    if !(mt.m1 > 0.0) {
        return Err(Error::invalid("m1", "must be positive"));
    }
    if let Some(cv2) = mt.centred_cv2 {
        return Ok(cv2.max(0.0).sqrt());
    }
    let ratio = mt.m2 * mt.m0 / (mt.m1 * mt.m1);
    let defect = ratio - 1.0;
    if defect < -1e-12 {
        return Err(Error::NumericalInconsistency {
            defect: mt.m2 * mt.m0 - mt.m1 * mt.m1,
        });
    }
    Ok(defect.max(0.0).sqrt())
}

/// Default stopping tolerance: tight for `p ≤ 1`, looser above.
pub fn default_tol(p: f64) -> f64 {
    if p <= 1.0 {
        1e-8
    } else {
        1e-4
    }
}

/// The weight `w(s)` in the transformed variable, split as
/// `s^{a0} · e^{R(s)}` with `R(0) = 0`.
#[derive(Debug, Clone, Copy)]
struct Family {
    law: NoiseLaw,
    strength: f64,
    gamma: f64,
    p: f64,
}

impl Family {
    fn new(dp: &DimensionlessParams) -> Self {
        Self {
            law: dp.law(),
            strength: dp.strength(),
            gamma: dp.gamma(),
            p: dp.p(),
        }
    }

    fn free(&self) -> bool {
        self.gamma == 0.0 || self.p == 0.0
    }

    /// Exponent of the power factor: `δ−2` or `η−1`.
    fn a0(&self) -> f64 {
        match self.law {
            NoiseLaw::Quadratic => self.strength - 2.0,
            NoiseLaw::Linear => self.strength - 1.0,
        }
    }

    /// Scale `c` and power `q` of the binding factor `(1 + s/c)^{±q}`.
    fn binding(&self) -> (f64, f64) {
        let s = self.strength;
        match self.law {
            NoiseLaw::Quadratic => (self.gamma * s, self.p * self.gamma * s),
            NoiseLaw::Linear => (s / self.gamma, self.p * s),
        }
    }

    fn residual(&self, s: f64) -> f64 {
        if self.free() {
            return -s;
        }
        let (c, q) = self.binding();
        match self.law {
            NoiseLaw::Quadratic => q * (s / c).ln_1p() - s,
            NoiseLaw::Linear => -q * (s / c).ln_1p() - s,
        }
    }

    fn ln_w(&self, s: f64) -> f64 {
        self.a0() * s.ln() + self.residual(s)
    }

    /// First and second derivatives of `ln w`.
    fn ln_w_derivs(&self, s: f64) -> (f64, f64) {
        let a0 = self.a0();
        let (mut d1, mut d2) = (a0 / s - 1.0, -a0 / (s * s));
        if !self.free() {
            let (c, q) = self.binding();
            let sign = match self.law {
                NoiseLaw::Quadratic => 1.0,
                NoiseLaw::Linear => -1.0,
            };
            d1 += sign * q / (c + s);
            d2 -= sign * q / ((c + s) * (c + s));
        }
        (d1, d2)
    }

    /// Abscissa `r` of the original variable.
    fn r_of_s(&self, s: f64) -> f64 {
        match self.law {
            NoiseLaw::Quadratic => self.strength / s,
            NoiseLaw::Linear => s / self.strength,
        }
    }

    /// `ln |dr/ds|`.
    fn ln_dr_ds(&self, s: f64) -> f64 {
        match self.law {
            NoiseLaw::Quadratic => self.strength.ln() - 2.0 * s.ln(),
            NoiseLaw::Linear => -self.strength.ln(),
        }
    }

    /// The r-density pulled back to s is `e^{prefactor} s^{extra} w(s)`.
    fn pullback(&self) -> (f64, f64) {
        let d = self.strength;
        match self.law {
            NoiseLaw::Quadratic => (-(1.0 + d) * d.ln(), 2.0),
            NoiseLaw::Linear => (-d * d.ln(), 0.0),
        }
    }

    /// Interior maximum of `ln w`, if one exists.
    fn interior_peak(&self) -> Option<f64> {
        let grid: Vec<f64> = (-120..=120)
            .map(|k| 10f64.powf(f64::from(k) / 10.0))
            .collect();
        let slope = |s: f64| self.ln_w_derivs(s).0;
        let bracket = grid
            .windows(2)
            .rev()
            .find(|w| slope(w[0]) > 0.0 && slope(w[1]) <= 0.0)?;
        let (mut lo, mut hi) = (bracket[0], bracket[1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Distance over which `R` first drops by one.
    fn e_fold(&self) -> f64 {
        let mut hi = 1e-12;
        while self.residual(hi) > -1.0 && hi < 1e12 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.residual(mid) > -1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    }

    /// Solves `−R(s) = x` for linear noise, where `R` is strictly
    /// decreasing and concave. Returns `s` and `ln ds/dx`.
    fn invert_residual(&self, x: f64) -> (f64, f64) {
        let (c, q) = self.binding();
        let g = |s: f64| q * (s / c).ln_1p() + s - x;
        let dg = |s: f64| q / (c + s) + 1.0;
        let mut s = x / dg(0.0);
        for _ in 0..200 {
            let step = g(s) / dg(s);
            s -= step;
            if step.abs() <= 4.0 * f64::EPSILON * s {
                break;
            }
        }
        (s, -dg(s).ln())
    }

    /// Rule placements to try, best guess first.
    fn candidates(&self) -> Vec<Placement> {
        let a0 = self.a0();
        let plain = Placement::Scaled { a: a0, lambda: 1.0 };
        if self.free() {
            return vec![plain];
        }
        let mut out = Vec::new();
        if self.law == NoiseLaw::Linear {
            out.push(Placement::Inverted { a: a0 });
        }
        match self.interior_peak() {
            Some(peak) => {
                let curvature = -self.ln_w_derivs(peak).1;
                let a_fit = peak * peak * curvature;
                if curvature > 0.0 && a_fit.is_finite() && a_fit > -1.0 {
                    let lambda_fit = peak / a_fit;
                    if a_fit - a0 <= 32.0 {
                        let lambda = lambda_fit * (a_fit + 1.0) / (a0 + 1.0);
                        out.push(Placement::Scaled { a: a0, lambda });
                    } else {
                        out.push(Placement::Scaled {
                            a: a_fit,
                            lambda: lambda_fit,
                        });
                    }
                }
            }
            None => out.push(Placement::Scaled {
                a: a0,
                lambda: self.e_fold(),
            }),
        }
        out.push(plain);
        out
    }
}

/// How a rule for `x^a e^{−x}` is laid onto the s-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Placement {
    /// `s = λx`.
    Scaled { a: f64, lambda: f64 },
    /// `s = (−R)^{-1}(x)`, so that `e^{R(s)} = e^{−x}` exactly.
    Inverted { a: f64 },
}

impl Placement {
    fn exponent(&self) -> f64 {
        match *self {
            Placement::Scaled { a, .. } | Placement::Inverted { a } => a,
        }
    }
}

/// Node in s, `ln(W_i · ds/dx / (x^a e^{−x}))`, and the size of the
/// largest piece that went into it (for the roundoff floor).
fn place_nodes(
    family: &Family,
    placement: Placement,
    rule: &QuadratureRule,
) -> Vec<(f64, f64, f64)> {
    let a = rule.exponent();
    rule.nodes()
        .iter()
        .zip(rule.ln_weights())
        .map(|(&x, &lw)| {
            let (s, ln_ds) = match placement {
                Placement::Scaled { lambda, .. } => (lambda * x, lambda.ln()),
                Placement::Inverted { .. } => family.invert_residual(x),
            };
            let size = lw.abs().max((a * x.ln()).abs()).max(x);
            (s, lw + ln_ds - a * x.ln() + x, size)
        })
        .collect()
}

/// Running quantities compared between successive orders.
#[derive(Debug, Clone, Copy)]
struct Estimate {
    ln_m: [f64; 3],
    cv2: f64,
    /// Roundoff level of `ln_m[0]`.
    floor: f64,
}

fn estimate(family: &Family, placement: Placement, n: usize) -> Result<Option<Estimate>> {
    let rule = cached_rule(n, placement.exponent())?;
    let (prefactor, extra) = family.pullback();
    let terms: Vec<(f64, f64, f64)> = place_nodes(family, placement, &rule)
        .into_iter()
        .map(|(s, base, size)| {
            let ln_w = family.ln_w(s);
            (
                family.r_of_s(s),
                base + ln_w + extra * s.ln(),
                size.max(ln_w.abs()),
            )
        })
        .collect();
    if terms
        .iter()
        .any(|(r, t, _)| !r.is_finite() || t.is_nan() || *t == f64::INFINITY)
    {
        return Ok(None);
    }
    let scale = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    if !scale.is_finite() {
        return Ok(None);
    }
    let mut sums = [0.0f64; 3];
    let mut size = 0.0f64;
    for &(r, t, sz) in &terms {
        let w = (t - scale).exp();
        sums[0] += w;
        sums[1] += w * r;
        sums[2] += w * r * r;
        if t - scale > -40.0 {
            size = size.max(sz);
        }
    }
    let mean = sums[1] / sums[0];
    let centred: f64 = terms
        .iter()
        .map(|&(r, t, _)| (t - scale).exp() * (r / mean - 1.0).powi(2))
        .sum();
    let shift = scale + prefactor;
    Ok(Some(Estimate {
        ln_m: [
            sums[0].ln() + shift,
            sums[1].ln() + shift,
            sums[2].ln() + shift,
        ],
        cv2: centred / sums[0],
        floor: 64.0 * f64::EPSILON * size,
    }))
}

/// Largest change between two estimates measured against its allowance,
/// with the two compared values. The mass is allowed its roundoff floor;
/// the normalized moments and the CV are held to `tol` alone.
fn change(a: &Estimate, b: &Estimate, tol: f64) -> (f64, f64, f64) {
    let mass_allowance = tol + a.floor.max(b.floor);
    let mut worst = (
        (a.ln_m[0] - b.ln_m[0]).abs() / mass_allowance,
        a.ln_m[0],
        b.ln_m[0],
    );
    for k in 1..3 {
        let (ra, rb) = (a.ln_m[k] - a.ln_m[0], b.ln_m[k] - b.ln_m[0]);
        let d = (ra - rb).abs() / tol;
        if d > worst.0 || d.is_nan() {
            worst = (d, ra.exp(), rb.exp());
        }
    }
    let d = (a.cv2 - b.cv2).abs() / b.cv2.abs().max(f64::MIN_POSITIVE) / tol;
    if d > worst.0 || d.is_nan() {
        worst = (d, a.cv2, b.cv2);
    }
    worst
}

fn refine(family: &Family, placement: Placement, tol: f64) -> Result<Result<Estimate, (f64, f64)>> {
    let mut prev: Option<Estimate> = None;
    let mut last_pair = (f64::NAN, f64::NAN);
    let mut n = N_MIN;
    while n <= N_MAX {
        let Some(cur) = estimate(family, placement, n)? else {
            return Ok(Err(last_pair));
        };
        if let Some(p) = prev {
            let (d, last, previous) = change(&cur, &p, tol);
            last_pair = (last, previous);
            if d < 1.0 {
                return Ok(Ok(cur));
            }
        }
        prev = Some(cur);
        n *= 2;
    }
    Ok(Err(last_pair))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "tol",
            format!("must lie in (0, 1), got {tol}"),
        ))
    }
}

fn check_moments_exist(dp: &DimensionlessParams) -> Result<()> {
    if dp.law() == NoiseLaw::Quadratic && dp.strength() <= 1.0 {
        return Err(Error::MomentDivergence {
            order: 2,
            shape: 1.0 + dp.strength(),
        });
    }
    Ok(())
}

/// Moments of the fast density computed by quadrature, including the free
/// case `γ = 0` or `p = 0`.
pub fn moments_quadrature(dp: &DimensionlessParams, tol: f64) -> Result<MomentTriple> {
    check_tol(tol)?;
    check_moments_exist(dp)?;
    let family = Family::new(dp);
    let mut last_pair = (f64::NAN, f64::NAN);
    for placement in family.candidates() {
        match refine(&family, placement, tol)? {
            Ok(est) => {
                let m1 = (est.ln_m[1] - est.ln_m[0]).exp();
                let m2 = (est.ln_m[2] - est.ln_m[0]).exp();
                return Ok(MomentTriple {
                    m0: 1.0,
                    m1,
                    m2,
                    log_scale: est.ln_m[0],
                    centred_cv2: Some(est.cv2),
                });
            }
            Err(pair) => last_pair = pair,
        }
    }
    Err(Error::Convergence {
        max_order: N_MAX,
        last: last_pair.0,
        previous: last_pair.1,
    })
}

/// Moments `m_k = ∫ r^k ρ_fast(r) dr` of the unnormalized fast density.
/// Without binding the closed-form moments of the free shape are returned.
pub fn moments_rhofast(dp: &DimensionlessParams, tol: f64) -> Result<MomentTriple> {
    check_tol(tol)?;
    check_moments_exist(dp)?;
    if dp.is_free() {
        return Ok(free_moments(dp));
    }
    moments_quadrature(dp, tol)
}

fn free_moments(dp: &DimensionlessParams) -> MomentTriple {
    let law = rho0_law(dp);
    let s = dp.strength();
    let (m1, m2) = match dp.law() {
        NoiseLaw::Quadratic => (1.0, s / (s - 1.0)),
        NoiseLaw::Linear => (1.0, 1.0 + 1.0 / s),
    };
    MomentTriple {
        m0: 1.0,
        m1,
        m2,
        log_scale: -law.ln_norm(),
        centred_cv2: Some(
            1.0 / match dp.law() {
                NoiseLaw::Quadratic => s - 1.0,
                NoiseLaw::Linear => s,
            },
        ),
    }
}

/// `ln C` with `C · ρ_fast` of unit mass.
pub fn ln_normalization_constant(dp: &DimensionlessParams, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if dp.is_free() {
        return Ok(rho0_law(dp).ln_norm());
    }
    let family = Family::new(dp);
    let mass = integrate_shape(&family, |s| ln_rhofast_shape(dp, family.r_of_s(s)), tol)?;
    Ok(-mass)
}

/// Constant `C` making `C · shape` a probability density on (0, ∞).
///
/// `shape` is evaluated in the original variable r; the rule placement is
/// chosen from `dp`, so the shape should be of comparable form (the free
/// or fast density for those parameters, or a smooth multiple of it).
pub fn normalize(shape: impl Fn(f64) -> f64, dp: &DimensionlessParams, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let family = Family::new(dp);
    let ln_mass = integrate_shape(&family, |s| shape(family.r_of_s(s)).ln(), tol)?;
    Ok((-ln_mass).exp())
}

/// `ln ∫ e^{ln_shape(s)} |dr/ds| ds` with the candidates of `family`.
fn integrate_shape(family: &Family, ln_shape: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let mut last_pair = (f64::NAN, f64::NAN);
    for placement in family.candidates() {
        let mut prev: Option<f64> = None;
        let mut n = N_MIN;
        let mut done = None;
        while n <= N_MAX {
            let rule = cached_rule(n, placement.exponent())?;
            let terms: Vec<f64> = place_nodes(family, placement, &rule)
                .into_iter()
                .map(|(s, base, _)| base + ln_shape(s) + family.ln_dr_ds(s))
                .collect();
            if terms.iter().any(|t| t.is_nan() || *t == f64::INFINITY) {
                break;
            }
            let scale = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !scale.is_finite() {
                break;
            }
            let cur = scale + terms.iter().map(|t| (t - scale).exp()).sum::<f64>().ln();
            if let Some(p) = prev {
                last_pair = (cur, p);
                if (cur - p).abs() < tol {
                    done = Some(cur);
                    break;
                }
            }
            prev = Some(cur);
            n *= 2;
        }
        if let Some(v) = done {
            return Ok(v);
        }
    }
    Err(Error::Convergence {
        max_order: N_MAX,
        last: last_pair.0,
        previous: last_pair.1,
    })
}
