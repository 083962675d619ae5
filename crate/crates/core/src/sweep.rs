//! Relative CV of the fast density over log-spaced (γ, p) grids.

use rayon::prelude::*;

use crate::distributions::cv_rho0;
use crate::error::{Error, Result};
use crate::params::{DimensionlessParams, NoiseLaw};
use crate::quadrature::{cv_from_moments, moments_rhofast};

/// `CV(ρ_fast) / CV(ρ₀)` for the given parameters.
pub fn relative_cv(dp: &DimensionlessParams, tol: f64) -> Result<f64> {
    Ok(fast_cv(dp, tol)? / cv_rho0(dp)?)
}

/// Absolute CV of the fast density.
pub fn fast_cv(dp: &DimensionlessParams, tol: f64) -> Result<f64> {
    cv_from_moments(&moments_rhofast(dp, tol)?)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid(
            "range",
            format!("need 0 < lo < hi, got [{lo}, {hi}]"),
        ));
    }
    if n < 2 {
        return Err(Error::invalid("count", "need at least two points"));
    }
    let (a, b) = (lo.log10(), hi.log10());
    let step = (b - a) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => 10f64.powf(a + step * i as f64),
        })
        .collect())
}

/// Axes of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub gamma_range: (f64, f64),
    pub p_range: (f64, f64),
    pub n_gamma: usize,
    pub n_p: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            gamma_range: (1e-2, 1e2),
            p_range: (1e-2, 1e2),
            n_gamma: 40,
            n_p: 40,
        }
    }
}

/// Dense table of CV values; cells whose quadrature failed hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub law: NoiseLaw,
    pub strength: f64,
    pub tol: f64,
    pub gammas: Vec<f64>,
    pub ps: Vec<f64>,
    /// `relative_cv[i][j]` belongs to `gammas[i]`, `ps[j]`.
    pub relative_cv: Vec<Vec<f64>>,
    pub cv: Vec<Vec<f64>>,
}

impl SweepResult {
    /// `(γ, p, relative CV)` with γ in the outer loop.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.gammas.iter().enumerate().flat_map(move |(i, &g)| {
            self.ps
                .iter()
                .enumerate()
                .map(move |(j, &p)| (g, p, self.relative_cv[i][j]))
        })
    }

    pub fn missing(&self) -> usize {
        self.relative_cv
            .iter()
            .flatten()
            .filter(|v| v.is_nan())
            .count()
    }

    /// Largest finite relative CV, with its (γ, p).
    pub fn max(&self) -> Option<(f64, f64, f64)> {
        self.rows()
            .filter(|r| r.2.is_finite())
            .max_by(|a, b| a.2.total_cmp(&b.2))
    }

    pub fn min(&self) -> Option<(f64, f64, f64)> {
        self.rows()
            .filter(|r| r.2.is_finite())
            .min_by(|a, b| a.2.total_cmp(&b.2))
    }
}

/// Evaluates the relative CV on every grid cell in parallel.
pub fn sweep(law: NoiseLaw, strength: f64, grid: &SweepGrid, tol: f64) -> Result<SweepResult> {
    let gammas = log_space(grid.gamma_range.0, grid.gamma_range.1, grid.n_gamma)?;
    let ps = log_space(grid.p_range.0, grid.p_range.1, grid.n_p)?;
    // Validate the law-level parameters once so bad input is an error, not
    // a table of NaN.
    let probe = DimensionlessParams::with_law(law, strength, gammas[0], ps[0])?;
    let cv0 = cv_rho0(&probe)?;

    let cells: Vec<(f64, f64)> = (0..gammas.len() * ps.len())
        .into_par_iter()
        .map(|k| {
            let (g, p) = (gammas[k / ps.len()], ps[k % ps.len()]);
            DimensionlessParams::with_law(law, strength, g, p)
                .and_then(|dp| fast_cv(&dp, tol))
                .map_or((f64::NAN, f64::NAN), |cv| (cv, cv / cv0))
        })
        .collect();

    let (cv, relative_cv) = cells
        .chunks(ps.len())
        .map(|row| row.iter().copied().unzip())
        .unzip();
    Ok(SweepResult {
        law,
        strength,
        tol,
        gammas,
        ps,
        relative_cv,
        cv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(delta: f64, gamma: f64, p: f64) -> DimensionlessParams {
        DimensionlessParams::quadratic(delta, gamma, p, 1.0, 1.0).unwrap()
    }

    #[test]
    fn limits_approach_one() {
        assert!((relative_cv(&quad(8.0, 1e-8, 1.0), 1e-10).unwrap() - 1.0).abs() < 1e-3);
        assert!((relative_cv(&quad(8.0, 1e8, 0.5), 1e-10).unwrap() - 1.0).abs() < 1e-2);
        assert!(relative_cv(&quad(8.0, 1.0, 2.0), 1e-10).unwrap() < 1.0);
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(1e-2, 1e2, 5).unwrap();
        assert_eq!(v[0], 1e-2);
        assert_eq!(v[4], 1e2);
        assert!((v[2] - 1.0).abs() < 1e-15);
        assert!(log_space(0.0, 1.0, 4).is_err());
        assert!(log_space(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn small_sweep_is_deterministic_and_ordered() {
        let grid = SweepGrid {
            n_gamma: 4,
            n_p: 3,
            ..SweepGrid::default()
        };
        let a = sweep(NoiseLaw::Quadratic, 8.0, &grid, 1e-10).unwrap();
        let b = sweep(NoiseLaw::Quadratic, 8.0, &grid, 1e-10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.missing(), 0);
        let rows: Vec<_> = a.rows().collect();
        assert_eq!(rows.len(), 12);
        assert_eq!((rows[1].0, rows[1].1), (a.gammas[0], a.ps[1]));
        for (g, p, v) in rows {
            let direct = relative_cv(&quad(8.0, g, p), 1e-10).unwrap();
            assert_eq!(v, direct);
        }
    }

    #[test]
    fn sweep_rejects_bad_strength() {
        let grid = SweepGrid {
            n_gamma: 2,
            n_p: 2,
            ..SweepGrid::default()
        };
        assert!(sweep(NoiseLaw::Quadratic, 1.0, &grid, 1e-8).is_err());
        assert!(sweep(NoiseLaw::Linear, -1.0, &grid, 1e-8).is_err());
    }
}
