//! Closed-form stationary densities: gamma and inverse-gamma laws, the free
//! density ρ₀, the unnormalized fast-µRNA density ρ_fast, the conditional
//! µRNA law and its mean, and the uniform CV bound C_δ.
//!
//! Densities are evaluated as logarithms and exponentiated at the end; the
//! exponent γpδ reaches 10⁴ in parameter sweeps.

use crate::error::{Error, Result};
use crate::params::{DimensionlessParams, ModelParams, NoiseLaw};
use crate::special::ln_gamma;

/// Shape `alpha` and rate `beta` of a gamma law; the inverse-gamma law with
/// the same parameters is its image under `y = 1/x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    alpha: f64,
    beta: f64,
}

impl GammaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid("beta", format!("must be > 0, got {beta}")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ln C_{α,β} = α ln β − ln Γ(α)`.
    pub fn ln_norm(&self) -> f64 {
        self.alpha * self.beta.ln() - ln_gamma(self.alpha)
    }

    pub fn ln_gamma_pdf(&self, x: f64) -> f64 {
        self.ln_norm() + (self.alpha - 1.0) * x.ln() - self.beta * x
    }

    pub fn ln_invgamma_pdf(&self, y: f64) -> f64 {
        self.ln_norm() - (1.0 + self.alpha) * y.ln() - self.beta / y
    }
}

fn check_positive(op: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { op, value: x })
    }
}

pub fn gamma_pdf(params: GammaParams, x: f64) -> Result<f64> {
    check_positive("gamma_pdf", x)?;
    Ok(params.ln_gamma_pdf(x).exp())
}

pub fn invgamma_pdf(params: GammaParams, y: f64) -> Result<f64> {
    check_positive("invgamma_pdf", y)?;
    Ok(params.ln_invgamma_pdf(y).exp())
}

/// First (`k = 1`) or second (`k = 2`) moment of the inverse-gamma law.
pub fn invgamma_moment(params: GammaParams, k: u32) -> Result<f64> {
    let GammaParams { alpha, beta } = params;
    if k == 0 {
        return Ok(1.0);
    }
    if k > 2 {
        return Err(Error::invalid(
            "k",
            format!("only moments 1 and 2 are provided, got {k}"),
        ));
    }
    if alpha <= f64::from(k) {
        return Err(Error::MomentDivergence {
            order: k,
            shape: alpha,
        });
    }
    Ok(match k {
        1 => beta / (alpha - 1.0),
        _ => beta * beta / ((alpha - 1.0) * (alpha - 2.0)),
    })
}

/// Parameters of the free density: inverse-gamma(1+δ, δ) for quadratic
/// noise, gamma(η, η) for linear noise. Both have unit mean.
pub fn rho0_law(dp: &DimensionlessParams) -> GammaParams {
    let s = dp.strength();
    match dp.law() {
        NoiseLaw::Quadratic => GammaParams {
            alpha: 1.0 + s,
            beta: s,
        },
        NoiseLaw::Linear => GammaParams { alpha: s, beta: s },
    }
}

pub fn ln_rho0(dp: &DimensionlessParams, r: f64) -> f64 {
    let law = rho0_law(dp);
    match dp.law() {
        NoiseLaw::Quadratic => law.ln_invgamma_pdf(r),
        NoiseLaw::Linear => law.ln_gamma_pdf(r),
    }
}

/// Normalized free density ρ₀ (ρ̃₀ under linear noise).
pub fn rho0(dp: &DimensionlessParams, r: f64) -> Result<f64> {
    check_positive("rho0", r)?;
    Ok(ln_rho0(dp, r).exp())
}

/// `ln(1 + 1/x)` without overflow for tiny `x`.
fn ln1p_recip(x: f64) -> f64 {
    if x >= 1.0 {
        (1.0 / x).ln_1p()
    } else {
        x.ln_1p() - x.ln()
    }
}

/// Logarithm of the free shape without its normalizing constant.
pub fn ln_rho0_shape(dp: &DimensionlessParams, r: f64) -> f64 {
    let s = dp.strength();
    match dp.law() {
        NoiseLaw::Quadratic => -(2.0 + s) * r.ln() - s / r,
        NoiseLaw::Linear => (s - 1.0) * r.ln() - s * r,
    }
}

/// Logarithm of the unnormalized fast-µRNA density.
///
/// Quadratic: `(1 + 1/(γr))^{γpδ} r^{−2−δ} e^{−δ/r}`.
/// Linear: `r^{η−1} (1+γr)^{−pη} e^{−ηr}`.
/// With `γ = 0` or `p = 0` this is exactly [`ln_rho0_shape`].
pub fn ln_rhofast_shape(dp: &DimensionlessParams, r: f64) -> f64 {
    let base = ln_rho0_shape(dp, r);
    if dp.is_free() {
        return base;
    }
    let (s, g, p) = (dp.strength(), dp.gamma(), dp.p());
    match dp.law() {
        NoiseLaw::Quadratic => base + g * p * s * ln1p_recip(g * r),
        NoiseLaw::Linear => base - p * s * (g * r).ln_1p(),
    }
}

pub fn rhofast_unnormalized(dp: &DimensionlessParams, r: f64) -> Result<f64> {
    check_positive("rhofast_unnormalized", r)?;
    Ok(ln_rhofast_shape(dp, r).exp())
}

/// Conditional law of µ given r in the fast-µRNA limit (quadratic noise):
/// inverse-gamma with `α = 1 + k_µ/σ_µ + (c/σ_µ) r`, `β = c_µ/σ_µ`.
pub fn conditional_mu_law(params: &ModelParams, r: f64) -> Result<GammaParams> {
    check_positive("conditional_mu_law", r)?;
    GammaParams::new(
        1.0 + params.k_mu() / params.sigma_mu() + params.c() / params.sigma_mu() * r,
        params.c_mu() / params.sigma_mu(),
    )
}

/// Dimensionless counterpart of [`conditional_mu_law`], µ measured in units
/// of c_µ/k_µ: `α = 1 + δκ(1+γr)/ν`, `β = δκ/ν`.
pub fn conditional_mu_law_dimensionless(dp: &DimensionlessParams, r: f64) -> Result<GammaParams> {
    check_positive("conditional_mu_law", r)?;
    let delta = dp.delta().ok_or_else(|| {
        Error::Unsupported("conditional µ law is derived for quadratic noise".into())
    })?;
    let ratio = delta * dp.kappa() / dp.nu();
    GammaParams::new(1.0 + ratio * (1.0 + dp.gamma() * r), ratio)
}

/// Conditional mean of µ given r in the fast limit, `c_µ/(k_µ + c r)`.
/// The same expression holds for both noise laws.
pub fn j_fast(params: &ModelParams, r: f64) -> f64 {
    params.c_mu() / (params.k_mu() + params.c() * r)
}

/// Dimensionless conditional mean, `1/(1 + γ r)`.
pub fn j_fast_dimensionless(dp: &DimensionlessParams, r: f64) -> f64 {
    1.0 / (1.0 + dp.gamma() * r)
}

/// Closed-form CV of the free density: `1/√(δ−1)` or `1/√η`.
pub fn cv_rho0(dp: &DimensionlessParams) -> Result<f64> {
    let s = dp.strength();
    match dp.law() {
        NoiseLaw::Quadratic => {
            if s <= 1.0 {
                return Err(Error::MomentDivergence {
                    order: 2,
                    shape: 1.0 + s,
                });
            }
            Ok(1.0 / (s - 1.0).sqrt())
        }
        NoiseLaw::Linear => Ok(1.0 / s.sqrt()),
    }
}

/// Uniform-in-(γ, p) upper bound on the CV of the fast density,
/// `C_δ = ((δ/(δ−1))² (1 − 1/(δ−1)²)^{δ−2} − 1)^{1/2}`, valid for δ > 2.
pub fn c_delta_bound(delta: f64) -> Result<f64> {
    if !(delta > 2.0 && delta.is_finite()) {
        return Err(Error::Domain {
            op: "c_delta_bound",
            value: delta,
        });
    }
    let dm1 = delta - 1.0;
    let ln_term = 2.0 * (delta / dm1).ln() + (delta - 2.0) * (-1.0 / (dm1 * dm1)).ln_1p();
    Ok(ln_term.exp_m1().sqrt())
}

/// A density sampled at strictly increasing abscissae, with one quadrature
/// cell per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    grid: Vec<f64>,
    widths: Vec<f64>,
    values: Vec<f64>,
}

impl Density1D {
    /// Cell widths are half the distance between neighbours (the full
    /// spacing at the two ends), which is exact for uniform cell centres.
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if n < 2 {
            return Err(Error::invalid("grid", "needs at least two points"));
        }
        let widths = (0..n)
            .map(|i| match i {
                0 => grid[1] - grid[0],
                _ if i == n - 1 => grid[n - 1] - grid[n - 2],
                _ => 0.5 * (grid[i + 1] - grid[i - 1]),
            })
            .collect();
        Self::with_widths(grid, widths, values)
    }

    pub fn with_widths(grid: Vec<f64>, widths: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() || grid.len() != widths.len() {
            return Err(Error::invalid("values", "length differs from grid"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", "must be strictly increasing"));
        }
        if widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("widths", "must be positive"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("values", "must be finite and nonnegative"));
        }
        Ok(Self {
            grid,
            widths,
            values,
        })
    }

    /// Samples `f` at the given abscissae.
    pub fn sample(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Midpoint-rule moment `Σ x_i^k f_i w_i`.
    pub fn moment(&self, k: i32) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .zip(&self.widths)
            .map(|((x, f), w)| x.powi(k) * f * w)
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.moment(0)
    }

    /// Rescaled to unit midpoint-rule mass.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(Self {
            values: self.values.iter().map(|v| v / m).collect(),
            ..self.clone()
        })
    }

    /// Coefficient of variation from midpoint-rule moments.
    pub fn cv(&self) -> Result<f64> {
        let (m0, m1) = (self.moment(0), self.moment(1));
        if !(m0 > 0.0) || !(m1 > 0.0) {
            return Err(Error::ZeroMass);
        }
        let mean = m1 / m0;
        let var: f64 = self
            .grid
            .iter()
            .zip(&self.values)
            .zip(&self.widths)
            .map(|((x, f), w)| (x - mean).powi(2) * f * w)
            .sum::<f64>()
            / m0;
        Ok(var.max(0.0).sqrt() / mean)
    }

    /// `Σ |f_i − g_i| w_i` against another density on the same cells.
    pub fn l1_distance(&self, other: &Density1D) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid("other", "densities live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(&self.widths)
            .map(|((a, b), w)| (a - b).abs() * w)
            .sum())
    }
}
