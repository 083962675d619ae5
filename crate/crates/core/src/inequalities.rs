//! Numerical checks of the weighted Poincaré inequalities, the Lyapunov
//! function used for well-posedness and the CV bound for fast µRNA.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::distributions::c_delta_bound;
use crate::error::{Error, Result};
use crate::params::{DimensionlessParams, ModelParams};
use crate::quadrature::{cached_rule, N_MAX, N_MIN};
use crate::special::ln_gamma;
use crate::sweep::fast_cv;

/// Tolerance for every integral in this module.
pub const TOL: f64 = 1e-10;
/// Smallest accepted Poincaré gap; anything lower counts as a violation.
pub const GAP_FLOOR: f64 = -1e-9;

type Map = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Power-law behaviour of a test function, used to decide integrability and
/// to absorb singular powers into the quadrature weight.
///
/// `value` holds the exponents k with `u ~ x^k` at 0 and at ∞, `flux` the
/// same for `x u'(x)`. Logarithms count as exponent 0. A function that
/// vanishes identically uses `(∞, −∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub value: (f64, f64),
    pub flux: (f64, f64),
}

impl Growth {
    pub const VANISHING: (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);

    /// Behaviour of `y ↦ u(1/y)`.
    fn reciprocal(self) -> Self {
        Self {
            value: (-self.value.1, -self.value.0),
            flux: (-self.flux.1, -self.flux.0),
        }
    }
}

/// A function `u` on `(0, ∞)` together with its derivative.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    value: Map,
    derivative: Map,
    growth: Growth,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("growth", &self.growth)
            .finish()
    }
}

const PROBES: [f64; 5] = [0.3, 0.7, 1.3, 2.9, 5.1];

impl TestFunction {
    /// Checks `derivative` against central differences of `value`.
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        growth: Growth,
    ) -> Result<Self> {
        let name = name.into();
        for x in PROBES {
            let h = 1e-5 * x;
            let fd = (value(x + h) - value(x - h)) / (2.0 * h);
            let d = derivative(x);
            let scale = d.abs().max(value(x).abs() / x).max(f64::MIN_POSITIVE);
            if !((fd - d).abs() <= 1e-6 * scale) {
                return Err(Error::invalid(
                    "derivative",
                    format!("{name}: u'({x}) = {d} but difference quotient gives {fd}"),
                ));
            }
        }
        Ok(Self {
            name,
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            growth,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    /// `x ↦ x^k`.
    pub fn power(k: f64) -> Self {
        let growth = Growth {
            value: (k, k),
            flux: (k, k),
        };
        Self::new(
            format!("x^{k}"),
            move |x| x.powf(k),
            move |x| k * x.powf(k - 1.0),
            growth,
        )
        .expect("exact derivative")
    }

    pub fn constant(c: f64) -> Self {
        let growth = Growth {
            value: (0.0, 0.0),
            flux: Growth::VANISHING,
        };
        Self::new(format!("{c}"), move |_| c, |_| 0.0, growth).expect("exact derivative")
    }

    pub fn log() -> Self {
        let growth = Growth {
            value: (0.0, 0.0),
            flux: (0.0, 0.0),
        };
        Self::new("log x", f64::ln, |x| 1.0 / x, growth).expect("exact derivative")
    }

    pub fn sin() -> Self {
        let growth = Growth {
            value: (1.0, 0.0),
            flux: (1.0, 1.0),
        };
        Self::new("sin x", f64::sin, f64::cos, growth).expect("exact derivative")
    }

    /// `a u + b`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        let (u, du) = (Arc::clone(&self.value), Arc::clone(&self.derivative));
        Self {
            name: format!("{a}*({}) + {b}", self.name),
            value: Arc::new(move |x| a * u(x) + b),
            derivative: Arc::new(move |x| a * du(x)),
            growth: self.growth,
        }
    }

    /// `y ↦ u(1/y)`.
    pub fn reciprocal(&self) -> Self {
        let (u, du) = (Arc::clone(&self.value), Arc::clone(&self.derivative));
        Self {
            name: format!("({})(1/y)", self.name),
            value: Arc::new(move |y| u(1.0 / y)),
            derivative: Arc::new(move |y| -du(1.0 / y) / (y * y)),
            growth: self.growth.reciprocal(),
        }
    }
}

/// `x, x², 1/x, log x, sin x`.
pub fn battery() -> Vec<TestFunction> {
    vec![
        TestFunction::power(1.0),
        TestFunction::power(2.0),
        TestFunction::power(-1.0),
        TestFunction::log(),
        TestFunction::sin(),
    ]
}

/// Both sides of a Poincaré inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareGap {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl PoincareGap {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            gap: rhs - lhs,
        }
    }

    /// `lhs / rhs`; at most one when the inequality holds.
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

fn check_shape(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", format!("must be > 1, got {alpha}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", format!("must be > 0, got {beta}")));
    }
    Ok(())
}

/// Both laws become `s^{α−1} e^{−s} / Γ(α)` in a variable `s`: `s = βx` for
/// the gamma law and `s = β/y` for the inverse gamma law. `x_of_s` maps
/// back, and `k0` holds the exponents in `s`, near `s = 0`, of the value and
/// of the flux `x u'(x)`.
struct Problem<'a, F> {
    alpha: f64,
    x_of_s: F,
    u: &'a TestFunction,
    /// Weight exponent shifts absorbing singular powers at `s = 0`.
    shift: (f64, f64),
}

/// `(lhs, rhs, E[u²])` from weighted samples of the value and of the flux.
fn sides(value: &[(f64, f64)], flux: &[(f64, f64)], a: f64) -> (f64, f64, f64) {
    let mean = value.iter().map(|(w, v)| w * v).sum::<f64>();
    let lhs = value
        .iter()
        .map(|(w, v)| w * (v - mean).powi(2))
        .sum::<f64>();
    let second = value.iter().map(|(w, v)| w * v * v).sum::<f64>();
    let rhs = flux.iter().map(|(w, f)| w * f * f).sum::<f64>() / a;
    (lhs, rhs, second)
}

impl<F: Fn(f64) -> f64> Problem<'_, F> {
    fn new(alpha: f64, x_of_s: F, u: &TestFunction, k0: (f64, f64)) -> Result<Problem<'_, F>> {
        let a = alpha - 1.0;
        let shift = (2.0 * k0.0.min(0.0), 2.0 * k0.1.min(0.0));
        for (sh, what) in [(shift.0, "u"), (shift.1, "x u'")] {
            if !(a + sh > -1.0) {
                return Err(Error::invalid(
                    "test function",
                    format!(
                        "{what} of `{}` is not square integrable for alpha = {alpha}",
                        u.name
                    ),
                ));
            }
        }
        Ok(Problem {
            alpha,
            x_of_s,
            u,
            shift,
        })
    }

    fn value_flux(&self, s: f64) -> (f64, f64) {
        let x = (self.x_of_s)(s);
        (self.u.value(x), x * self.u.derivative(x))
    }

    /// Gauss–Laguerre of order `n` in `s`.
    fn laguerre(&self, n: usize) -> Result<(f64, f64, f64)> {
        let a = self.alpha - 1.0;
        let ln_norm = ln_gamma(self.alpha);
        let sample = |sh: f64, flux: bool| -> Result<Vec<(f64, f64)>> {
            let rule = cached_rule(n, a + sh)?;
            Ok(rule
                .nodes()
                .iter()
                .zip(rule.ln_weights())
                .map(|(&s, &lw)| {
                    let (v, f) = self.value_flux(s);
                    ((lw - sh * s.ln() - ln_norm).exp(), if flux { f } else { v })
                })
                .collect())
        };
        Ok(sides(
            &sample(self.shift.0, false)?,
            &sample(self.shift.1, true)?,
            a,
        ))
    }

    /// Midpoint rule with `n` points in `t = ln s`, which converges
    /// geometrically even with logarithmic or algebraic behaviour at 0.
    fn log_midpoint(&self, n: usize) -> (f64, f64, f64) {
        let a = self.alpha - 1.0;
        // Truncate where the weight times the squared integrand is below
        // about e^{-36} of its scale.
        let decay = a + 1.0 + self.shift.0.min(self.shift.1);
        let (lo, hi) = (-36.0 / decay, (2.0 * (a + 1.0) + 80.0).ln());
        let h = (hi - lo) / n as f64;
        let ln_norm = ln_gamma(self.alpha);
        let (mut value, mut flux) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for k in 0..n {
            let t = lo + (k as f64 + 0.5) * h;
            let s = t.exp();
            let w = h * ((a + 1.0) * t - s - ln_norm).exp();
            let (v, f) = self.value_flux(s);
            value.push((w, v));
            flux.push((w, f));
        }
        sides(&value, &flux, a)
    }

    /// Doubles the order of `rule` from `first` to `last` until both sides
    /// settle.
    fn refine(
        &self,
        first: usize,
        last: usize,
        rule: impl Fn(usize) -> Result<(f64, f64, f64)>,
    ) -> Result<PoincareGap> {
        let settled = |new: f64, old: f64, scale: f64| {
            let d = (new - old).abs();
            d <= TOL * new.abs() || d <= 1e-15 * scale
        };
        let mut n = first;
        let mut prev = rule(n)?;
        while n < last {
            n *= 2;
            let cur = rule(n)?;
            if !(cur.0.is_finite() && cur.1.is_finite()) {
                break;
            }
            if settled(cur.0, prev.0, cur.2) && settled(cur.1, prev.1, cur.1.abs()) {
                return Ok(PoincareGap::new(cur.0, cur.1));
            }
            if n == last {
                return Err(Error::Convergence {
                    max_order: last,
                    last: cur.0,
                    previous: prev.0,
                });
            }
            prev = cur;
        }
        Err(Error::Convergence {
            max_order: n,
            last: prev.0,
            previous: f64::NAN,
        })
    }

    fn solve(&self) -> Result<PoincareGap> {
        self.refine(N_MIN, N_MAX, |n| self.laguerre(n))
            .or_else(|e| match e {
                Error::Convergence { .. } => {
                    self.refine(1 << 12, 1 << 22, |n| Ok(self.log_midpoint(n)))
                }
                e => Err(e),
            })
    }
}

/// `Var_γ(u)` against `(1/(α−1)) ∫ |u'|² x² γ_{α,β}`.
pub fn poincare_gap_gamma(alpha: f64, beta: f64, u: &TestFunction) -> Result<PoincareGap> {
    check_shape(alpha, beta)?;
    let g = u.growth();
    Problem::new(alpha, |s| s / beta, u, (g.value.0, g.flux.0))?.solve()
}

/// `Var_g(v)` against `(1/(α−1)) ∫ |v'|² y² g_{α,β}` for the inverse gamma law.
pub fn poincare_gap_invgamma(alpha: f64, beta: f64, v: &TestFunction) -> Result<PoincareGap> {
    check_shape(alpha, beta)?;
    let g = v.growth();
    Problem::new(alpha, |s| beta / s, v, (-g.value.1, -g.flux.1))?.solve()
}

/// `v(y) = β − (α−1) y`, the image of `V'` for the gamma potential under
/// `y = 1/x`. The inverse gamma inequality is an equality for it.
pub fn invgamma_equality_case(alpha: f64, beta: f64) -> TestFunction {
    TestFunction::power(1.0).affine(-(alpha - 1.0), beta)
}

/// `V'(y)` for `V = −log g_{α,β}`: `(α+1)/y − β/y²`.
pub fn invgamma_potential_derivative(alpha: f64, beta: f64) -> TestFunction {
    let growth = Growth {
        value: (-2.0, -1.0),
        flux: (-2.0, -1.0),
    };
    TestFunction::new(
        "V'(y)",
        move |y| (alpha + 1.0) / y - beta / (y * y),
        move |y| -(alpha + 1.0) / (y * y) + 2.0 * beta / (y * y * y),
        growth,
    )
    .expect("exact derivative")
}

/// The gamma inequality by a plain midpoint rule with `n` points in `ln x`,
/// independent of the Laguerre rules.
pub fn poincare_gap_gamma_midpoint(
    alpha: f64,
    beta: f64,
    u: &TestFunction,
    n: usize,
) -> Result<PoincareGap> {
    check_shape(alpha, beta)?;
    let g = u.growth();
    let (lhs, rhs, _) =
        Problem::new(alpha, |s| s / beta, u, (g.value.0, g.flux.0))?.log_midpoint(n);
    Ok(PoincareGap::new(lhs, rhs))
}

/// `U(r, µ) = b_r r − ln(b_r r) + b_µ µ − ln(b_µ µ)`.
pub fn lyapunov_u(b_r: f64, b_mu: f64, r: f64, mu: f64) -> f64 {
    b_r * r - (b_r * r).ln() + b_mu * mu - (b_mu * mu).ln()
}

/// The generator of the SDE applied to [`lyapunov_u`].
///
/// Requires `b_r k_r > c` and `b_µ k_µ > c`, which make the linear terms
/// drive `LU` to −∞.
pub fn lyapunov_lu(params: &ModelParams, b_r: f64, b_mu: f64, r: f64, mu: f64) -> Result<f64> {
    let m = params;
    if !(b_r * m.k_r() > m.c()) {
        return Err(Error::invalid(
            "b_r",
            format!("need b_r k_r > c, got b_r = {b_r}"),
        ));
    }
    if !(b_mu * m.k_mu() > m.c()) {
        return Err(Error::invalid(
            "b_mu",
            format!("need b_mu k_mu > c, got b_mu = {b_mu}"),
        ));
    }
    if !(r > 0.0 && mu > 0.0) {
        return Err(Error::Domain {
            op: "lyapunov_lu",
            value: r.min(mu),
        });
    }
    let constant =
        m.sigma_r() + m.sigma_mu() + b_r * m.c_r() + b_mu * m.c_mu() + m.k_r() + m.k_mu();
    Ok(constant
        - m.c_r() / r
        - m.c_mu() / mu
        - (b_r * m.k_r() - m.c()) * r
        - (b_mu * m.k_mu() - m.c()) * mu
        - m.c() * r * mu * (b_r + b_mu))
}

/// Outcome of [`check_cv_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct CvBound {
    pub delta: f64,
    pub bound: f64,
    /// Largest `CV − C_δ` over the cells that converged.
    pub max_violation: f64,
    /// `(γ, p, CV)` where the maximum is attained.
    pub worst: Option<(f64, f64, f64)>,
    /// Cells whose quadrature failed, with the reason.
    pub failures: Vec<(f64, f64, String)>,
}

/// Largest excess of the fast-µRNA CV over `C_δ` on the `(γ, p)` grid.
pub fn check_cv_bound(delta: f64, gammas: &[f64], ps: &[f64]) -> Result<CvBound> {
    let bound = c_delta_bound(delta)?;
    let cells: Vec<(f64, f64, Result<f64>)> = gammas
        .iter()
        .flat_map(|&g| ps.iter().map(move |&p| (g, p)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(g, p)| {
            let cv = DimensionlessParams::quadratic(delta, g, p, 1.0, 1.0)
                .and_then(|dp| fast_cv(&dp, TOL));
            (g, p, cv)
        })
        .collect();
    let mut out = CvBound {
        delta,
        bound,
        max_violation: f64::NEG_INFINITY,
        worst: None,
        failures: Vec::new(),
    };
    for (g, p, cv) in cells {
        match cv {
            Ok(cv) if cv - bound > out.max_violation => {
                out.max_violation = cv - bound;
                out.worst = Some((g, p, cv));
            }
            Ok(_) => {}
            Err(e) => out.failures.push((g, p, e.to_string())),
        }
    }
    Ok(out)
}

/// Result of one entry in the report.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Pass,
    Fail,
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub detail: String,
    pub status: Status,
}

impl Check {
    fn judged(name: String, detail: String, ok: bool) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self {
            name,
            detail,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .count()
    }

    pub fn skipped(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| matches!(c.status, Status::Skipped(_)))
            .count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let (tag, detail) = match &c.status {
                Status::Pass => ("PASS", c.detail.clone()),
                Status::Fail => ("FAIL", c.detail.clone()),
                Status::Skipped(why) => ("SKIP", why.clone()),
            };
            writeln!(f, "{tag} {:<44} {detail}", c.name)?;
        }
        writeln!(
            f,
            "{} checks, {} failed, {} skipped",
            self.checks.len(),
            self.failures(),
            self.skipped()
        )
    }
}

pub const ALPHAS: [f64; 4] = [2.0, 3.0, 5.0, 10.0];
pub const BETAS: [f64; 4] = [0.5, 1.0, 2.0, 8.0];

fn gap_check(
    law: &str,
    alpha: f64,
    beta: f64,
    u: &TestFunction,
    gap: Result<PoincareGap>,
) -> Check {
    let name = format!("{law} Poincare a={alpha} b={beta} u={}", u.name());
    match gap {
        Ok(g) => Check::judged(
            name,
            format!("lhs={:.10e} rhs={:.10e} gap={:.3e}", g.lhs, g.rhs, g.gap),
            g.gap >= GAP_FLOOR,
        ),
        Err(e) => skipped(name, e),
    }
}

/// Parts of the verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Poincare,
    Lyapunov,
    CvBound,
}

/// Runs the selected checks.
pub fn run_suite(suite: Suite) -> Report {
    let mut checks = Vec::new();
    if matches!(suite, Suite::All | Suite::Poincare) {
        checks.extend(poincare_checks());
    }
    if matches!(suite, Suite::All | Suite::Lyapunov) {
        checks.extend(lyapunov_checks());
    }
    if matches!(suite, Suite::All | Suite::CvBound) {
        checks.extend(cv_bound_checks());
    }
    Report { checks }
}

pub fn run_all() -> Report {
    run_suite(Suite::All)
}

fn skipped(name: String, e: Error) -> Check {
    Check {
        name,
        detail: String::new(),
        status: Status::Skipped(e.to_string()),
    }
}

fn poincare_checks() -> Vec<Check> {
    let fns = battery();
    let n = fns.len();
    let entries: Vec<(f64, f64, usize)> = ALPHAS
        .iter()
        .flat_map(|&a| {
            BETAS
                .iter()
                .flat_map(move |&b| (0..n).map(move |k| (a, b, k)))
        })
        .collect();

    let mut checks: Vec<Check> = entries
        .par_iter()
        .flat_map_iter(|&(a, b, k)| {
            let u = &fns[k];
            let g = poincare_gap_gamma(a, b, u);
            let ig = poincare_gap_invgamma(a, b, u);
            let dual = poincare_gap_invgamma(a, b, &u.reciprocal());
            let name = format!("duality a={a} b={b} u={}", u.name());
            let duality = match (&g, dual) {
                (Ok(x), Ok(y)) => {
                    let d = (x.lhs - y.lhs).abs().max((x.rhs - y.rhs).abs());
                    let scale = 1.0 + x.lhs.abs().max(x.rhs.abs());
                    Check::judged(name, format!("max difference {d:.3e}"), d <= 1e-8 * scale)
                }
                (Err(e), _) => Check {
                    name,
                    detail: String::new(),
                    status: Status::Skipped(e.to_string()),
                },
                (_, Err(e)) => skipped(name, e),
            };
            [
                gap_check("gamma", a, b, u, g),
                gap_check("inverse gamma", a, b, u, ig),
                duality,
            ]
        })
        .collect();

    for (a, b) in [(3.0, 2.0), (5.0, 1.0), (10.0, 8.0)] {
        // V' for the gamma potential, and its image under y = 1/x.
        let cases = [
            (
                "gamma",
                "b-(a-1)/x",
                poincare_gap_gamma(a, b, &TestFunction::power(-1.0).affine(-(a - 1.0), b)),
            ),
            (
                "inverse gamma",
                "b-(a-1)y",
                poincare_gap_invgamma(a, b, &invgamma_equality_case(a, b)),
            ),
        ];
        for (law, fname, gap) in cases {
            let name = format!("{law} equality a={a} b={b} u={fname}");
            checks.push(match gap {
                Ok(g) => Check::judged(
                    name,
                    format!("lhs/rhs={:.12}", g.ratio()),
                    (1.0 - 1e-6..=1.0 + 1e-12).contains(&g.ratio()),
                ),
                Err(e) => Check::judged(name, e.to_string(), false),
            });
        }
    }

    let u = TestFunction::power(2.0);
    for (a, b) in [(3.0, 2.0), (5.0, 1.0)] {
        let name = format!("midpoint cross-check a={a} b={b} u=x^2");
        let (q, m) = (
            poincare_gap_gamma(a, b, &u),
            poincare_gap_gamma_midpoint(a, b, &u, 200_000),
        );
        checks.push(match (q, m) {
            (Ok(q), Ok(m)) => {
                let d = ((q.lhs - m.lhs) / q.lhs)
                    .abs()
                    .max(((q.rhs - m.rhs) / q.rhs).abs());
                Check::judged(name, format!("relative difference {d:.3e}"), d < 1e-8)
            }
            (Err(e), _) | (_, Err(e)) => Check::judged(name, e.to_string(), false),
        });
    }
    checks
}

fn lyapunov_checks() -> Vec<Check> {
    let params = ModelParams::new(1.0, 1.0, 0.5, 1.0, 1.0, 1.0, 1.0).expect("valid rates");
    let mut checks = Vec::new();
    let name = "Lyapunov LU(100, 100) < 0".to_string();
    checks.push(match lyapunov_lu(&params, 1.0, 1.0, 100.0, 100.0) {
        Ok(v) => Check::judged(name, format!("{v:.6e}"), v < 0.0),
        Err(e) => Check::judged(name, e.to_string(), false),
    });
    let along: Vec<f64> = (1..=4)
        .map(|k| lyapunov_lu(&params, 1.0, 1.0, 10f64.powi(k), 10f64.powi(k)).unwrap_or(f64::NAN))
        .collect();
    checks.push(Check::judged(
        "Lyapunov LU decreasing along r = mu = 10^k".into(),
        along
            .iter()
            .map(|v| format!("{v:.4e}"))
            .collect::<Vec<_>>()
            .join(" > "),
        along.windows(2).all(|w| w[1] < w[0]),
    ));
    let u_min = lyapunov_u(2.0, 0.5, 0.5, 2.0);
    checks.push(Check::judged(
        "Lyapunov U minimum equals 2".into(),
        format!("U(1/b_r, 1/b_mu) = {u_min}"),
        (u_min - 2.0).abs() < 1e-14,
    ));
    checks
}

fn cv_bound_checks() -> Vec<Check> {
    let grid = crate::sweep::log_space(1e-2, 1e2, 10).expect("valid range");
    [3.0, 2.5, 8.0]
        .into_iter()
        .map(|delta| {
            let name = format!("CV bound delta={delta} on 10x10 grid");
            match check_cv_bound(delta, &grid, &grid) {
                Ok(cb) => Check::judged(
                    name,
                    format!(
                        "C_delta={:.10} max violation={:.3e} failed cells={}",
                        cb.bound,
                        cb.max_violation,
                        cb.failures.len()
                    ),
                    cb.max_violation <= 1e-6,
                ),
                Err(e) => Check::judged(name, e.to_string(), false),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_linear_function() {
        let g = poincare_gap_gamma(3.0, 2.0, &TestFunction::power(1.0)).unwrap();
        assert_relative_eq!(g.lhs, 0.75, max_relative = 1e-12);
        assert_relative_eq!(g.rhs, 1.5, max_relative = 1e-12);
        assert_relative_eq!(g.gap, 0.75, max_relative = 1e-12);
    }

    #[test]
    fn constants_have_no_variance() {
        let c = TestFunction::constant(3.5);
        for g in [
            poincare_gap_gamma(4.0, 1.0, &c).unwrap(),
            poincare_gap_invgamma(4.0, 1.0, &c).unwrap(),
        ] {
            assert!(g.lhs.abs() < 1e-20, "{g:?}");
            assert_eq!(g.rhs, 0.0);
        }
    }

    #[test]
    fn gamma_square_has_positive_gap() {
        // Var(x²) = α(α+1)(4α+6)/β⁴ and E[(2x²)²]/(α−1) = 4α(α+1)(α+2)(α+3)/(β⁴(α−1)).
        let g = poincare_gap_gamma(5.0, 1.0, &TestFunction::power(2.0)).unwrap();
        assert_relative_eq!(g.lhs, 5.0 * 6.0 * 26.0, max_relative = 1e-12);
        assert_relative_eq!(
            g.rhs,
            4.0 * 5.0 * 6.0 * 7.0 * 8.0 / 4.0,
            max_relative = 1e-12
        );
        assert!(g.gap > 0.0);
    }

    #[test]
    fn inverse_gamma_reciprocal() {
        let g = poincare_gap_invgamma(3.0, 2.0, &TestFunction::power(-1.0)).unwrap();
        assert_relative_eq!(g.lhs, 0.75, max_relative = 1e-12);
        assert_relative_eq!(g.rhs, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn equality_cases() {
        for (a, b) in [(3.0, 2.0), (2.5, 0.5), (10.0, 8.0)] {
            let g = poincare_gap_invgamma(a, b, &invgamma_equality_case(a, b)).unwrap();
            assert!((1.0 - 1e-6..=1.0 + 1e-12).contains(&g.ratio()), "{g:?}");
            let u = TestFunction::power(-1.0).affine(-(a - 1.0), b);
            let g = poincare_gap_gamma(a, b, &u).unwrap();
            assert!((1.0 - 1e-6..=1.0 + 1e-12).contains(&g.ratio()), "{g:?}");
        }
    }

    #[test]
    fn potential_derivative_is_not_extremal() {
        let g = poincare_gap_invgamma(3.0, 2.0, &invgamma_potential_derivative(3.0, 2.0)).unwrap();
        assert!(g.gap > 0.0);
        assert!(g.ratio() < 0.99, "{}", g.ratio());
    }

    #[test]
    fn duality_under_reciprocal() {
        for u in battery() {
            let v = u.reciprocal();
            if let (Ok(a), Ok(b)) = (
                poincare_gap_gamma(5.0, 2.0, &u),
                poincare_gap_invgamma(5.0, 2.0, &v),
            ) {
                assert!(
                    (a.lhs - b.lhs).abs() <= 1e-8 * (1.0 + a.lhs),
                    "{}",
                    u.name()
                );
                assert!(
                    (a.rhs - b.rhs).abs() <= 1e-8 * (1.0 + a.rhs),
                    "{}",
                    u.name()
                );
            }
        }
    }

    #[test]
    fn non_integrable_entries_are_rejected() {
        assert!(poincare_gap_gamma(2.0, 1.0, &TestFunction::power(-1.0)).is_err());
        assert!(poincare_gap_invgamma(3.0, 1.0, &TestFunction::power(2.0)).is_err());
        assert!(poincare_gap_gamma(1.0, 1.0, &TestFunction::power(1.0)).is_err());
    }

    #[test]
    fn midpoint_agrees_with_laguerre() {
        let u = TestFunction::power(2.0);
        let q = poincare_gap_gamma(3.0, 2.0, &u).unwrap();
        let m = poincare_gap_gamma_midpoint(3.0, 2.0, &u, 200_000).unwrap();
        assert_relative_eq!(q.lhs, m.lhs, max_relative = 1e-8);
        assert_relative_eq!(q.rhs, m.rhs, max_relative = 1e-8);
    }

    #[test]
    fn full_report() {
        let report = run_all();
        print!("{report}");
        assert!(report.passed());
        let skipped = report.skipped();
        // 1/x at alpha = 2 and the like are not square integrable.
        assert!(
            skipped > 0 && skipped < report.checks.len() / 3,
            "{skipped}"
        );
        assert!(report.to_string().lines().count() > 100);
        assert_eq!(run_suite(Suite::Lyapunov).checks.len(), 3);
    }

    #[test]
    fn wrong_derivative_is_caught() {
        let g = Growth {
            value: (1.0, 1.0),
            flux: (1.0, 1.0),
        };
        assert!(TestFunction::new("bad", |x| x, |_| 1.001, g).is_err());
    }

    #[test]
    fn lyapunov_examples() {
        let params = ModelParams::new(1.0, 1.0, 0.5, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(lyapunov_lu(&params, 1.0, 1.0, 100.0, 100.0).unwrap() < 0.0);
        let along: Vec<f64> = (1..=4)
            .map(|k| lyapunov_lu(&params, 1.0, 1.0, 10f64.powi(k), 10f64.powi(k)).unwrap())
            .collect();
        assert!(along.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(lyapunov_u(4.0, 0.25, 0.25, 4.0), 2.0);
        assert!(lyapunov_u(4.0, 0.25, 0.3, 4.0) > 2.0);
        assert!(lyapunov_lu(&params, 0.4, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lyapunov_matches_generator() {
        // Apply the generator to U with finite differences.
        let m = ModelParams::new(2.0, 3.0, 0.7, 1.5, 2.5, 0.4, 0.9).unwrap();
        let (br, bm) = (1.0, 0.8);
        let (r, mu) = (1.3, 0.6);
        let u = |r: f64, mu: f64| lyapunov_u(br, bm, r, mu);
        let h = 1e-4;
        let ur = (u(r + h, mu) - u(r - h, mu)) / (2.0 * h);
        let um = (u(r, mu + h) - u(r, mu - h)) / (2.0 * h);
        let urr = (u(r + h, mu) - 2.0 * u(r, mu) + u(r - h, mu)) / (h * h);
        let umm = (u(r, mu + h) - 2.0 * u(r, mu) + u(r, mu - h)) / (h * h);
        let bind = m.c() * r * mu;
        let gen = (m.c_r() - bind - m.k_r() * r) * ur
            + (m.c_mu() - bind - m.k_mu() * mu) * um
            + m.sigma_r() * r * r * urr
            + m.sigma_mu() * mu * mu * umm;
        assert_relative_eq!(
            lyapunov_lu(&m, br, bm, r, mu).unwrap(),
            gen,
            max_relative = 1e-6
        );
    }

    #[test]
    fn cv_bound_holds() {
        let grid = crate::sweep::log_space(1e-2, 1e2, 10).unwrap();
        for delta in [3.0, 2.5] {
            let cb = check_cv_bound(delta, &grid, &grid).unwrap();
            assert!(cb.max_violation <= 1e-6, "{cb:?}");
            assert!(cb.bound.is_finite());
        }
        let cb = check_cv_bound(8.0, &[1e-9], &[1.0]).unwrap();
        assert_relative_eq!(cb.worst.unwrap().2, 1.0 / 7f64.sqrt(), max_relative = 1e-6);
        assert!(cb.max_violation < 0.0);
        assert!(check_cv_bound(2.0, &grid, &grid).is_err());
    }
}
