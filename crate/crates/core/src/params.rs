//! Dimensional rate constants of the mRNA/µRNA system and their
//! dimensionless groups.
//!
//! Both parameter sets are validated when built; everything downstream
//! assumes the invariants hold.

use crate::error::{Error, Result};

/// Shape of the multiplicative noise in the production terms.
///
/// `Quadratic` is the diffusion `sqrt(2σ) x dB` (inverse-gamma equilibria),
/// `Linear` is `sqrt(2σ x) dB` (gamma equilibria).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseLaw {
    Quadratic,
    Linear,
}

impl NoiseLaw {
    pub fn name(self) -> &'static str {
        match self {
            NoiseLaw::Quadratic => "quadratic",
            NoiseLaw::Linear => "linear",
        }
    }
}

impl std::str::FromStr for NoiseLaw {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "quadratic" => Ok(NoiseLaw::Quadratic),
            "linear" => Ok(NoiseLaw::Linear),
            other => Err(format!(
                "unknown noise law `{other}` (expected quadratic or linear)"
            )),
        }
    }
}

impl std::fmt::Display for NoiseLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Rate constants of the stochastic kinetic system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    c_r: f64,
    c_mu: f64,
    c: f64,
    k_r: f64,
    k_mu: f64,
    sigma_r: f64,
    sigma_mu: f64,
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn nonnegative(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and >= 0, got {v}"),
        ))
    }
}

impl ModelParams {
    /// Production rates `c_r`, `c_mu`, binding rate `c`, decay rates `k_r`,
    /// `k_mu` and noise intensities `sigma_r`, `sigma_mu`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c_r: f64,
        c_mu: f64,
        c: f64,
        k_r: f64,
        k_mu: f64,
        sigma_r: f64,
        sigma_mu: f64,
    ) -> Result<Self> {
        Ok(Self {
            c_r: positive("c_r", c_r)?,
            c_mu: positive("c_mu", c_mu)?,
            c: nonnegative("c", c)?,
            k_r: positive("k_r", k_r)?,
            k_mu: positive("k_mu", k_mu)?,
            sigma_r: positive("sigma_r", sigma_r)?,
            sigma_mu: positive("sigma_mu", sigma_mu)?,
        })
    }

    pub fn c_r(&self) -> f64 {
        self.c_r
    }
    pub fn c_mu(&self) -> f64 {
        self.c_mu
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn k_r(&self) -> f64 {
        self.k_r
    }
    pub fn k_mu(&self) -> f64 {
        self.k_mu
    }
    pub fn sigma_r(&self) -> f64 {
        self.sigma_r
    }
    pub fn sigma_mu(&self) -> f64 {
        self.sigma_mu
    }

    /// Deterministic steady states without binding, `(c_r/k_r, c_mu/k_mu)`.
    pub fn characteristic_values(&self) -> (f64, f64) {
        (self.c_r / self.k_r, self.c_mu / self.k_mu)
    }

    pub fn nondimensionalize(&self, law: NoiseLaw) -> DimensionlessParams {
        let strength = match law {
            NoiseLaw::Quadratic => self.k_r / self.sigma_r,
            NoiseLaw::Linear => self.c_r / self.sigma_r,
        };
        // Every ratio of validated rates is finite and positive, so this
        // cannot fail.
        DimensionlessParams {
            law,
            strength,
            gamma: self.c * self.c_r / (self.k_mu * self.k_r),
            p: self.c_mu / self.c_r,
            kappa: self.k_mu / self.k_r,
            nu: self.sigma_mu / self.sigma_r,
        }
    }
}

/// Free function form of [`ModelParams::nondimensionalize`].
pub fn nondimensionalize(params: &ModelParams, law: NoiseLaw) -> DimensionlessParams {
    params.nondimensionalize(law)
}

/// Free function form of [`ModelParams::characteristic_values`].
pub fn characteristic_values(params: &ModelParams) -> (f64, f64) {
    params.characteristic_values()
}

/// Dimensionless groups of the model.
///
/// `strength` is δ = k_r/σ_r under quadratic noise and η = c_r/σ_r under
/// linear noise. γ = c c_r/(k_mu k_r), p = c_mu/c_r, κ = k_mu/k_r and
/// ν = σ_mu/σ_r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    law: NoiseLaw,
    strength: f64,
    gamma: f64,
    p: f64,
    kappa: f64,
    nu: f64,
}

impl DimensionlessParams {
    pub fn quadratic(delta: f64, gamma: f64, p: f64, kappa: f64, nu: f64) -> Result<Self> {
        Ok(Self {
            law: NoiseLaw::Quadratic,
            strength: positive("delta", delta)?,
            gamma: nonnegative("gamma", gamma)?,
            p: nonnegative("p", p)?,
            kappa: positive("kappa", kappa)?,
            nu: positive("nu", nu)?,
        })
    }

    /// Linear-noise parameters; κ and ν do not enter the linear-noise
    /// densities and are set to 1.
    pub fn linear(eta: f64, gamma: f64, p: f64) -> Result<Self> {
        Ok(Self {
            law: NoiseLaw::Linear,
            strength: positive("eta", eta)?,
            gamma: nonnegative("gamma", gamma)?,
            p: nonnegative("p", p)?,
            kappa: 1.0,
            nu: 1.0,
        })
    }

    /// Builds parameters for either law from the noise strength (δ or η).
    pub fn with_law(law: NoiseLaw, strength: f64, gamma: f64, p: f64) -> Result<Self> {
        match law {
            NoiseLaw::Quadratic => Self::quadratic(strength, gamma, p, 1.0, 1.0),
            NoiseLaw::Linear => Self::linear(strength, gamma, p),
        }
    }

    pub fn law(&self) -> NoiseLaw {
        self.law
    }

    /// δ or η depending on the law.
    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn delta(&self) -> Option<f64> {
        (self.law == NoiseLaw::Quadratic).then_some(self.strength)
    }

    pub fn eta(&self) -> Option<f64> {
        (self.law == NoiseLaw::Linear).then_some(self.strength)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Same parameters with binding switched off.
    pub fn without_binding(&self) -> Self {
        Self {
            gamma: 0.0,
            ..*self
        }
    }

    /// True when the fast density reduces to the free one.
    pub fn is_free(&self) -> bool {
        self.gamma == 0.0 || self.p == 0.0
    }
}
