//! Steady states of the two-dimensional Fokker-Planck equation on a
//! truncated rectangle.
//!
//! The scheme has a one-dimensional kernel plus a mass row. It is solved by
//! pinning one unknown in the bulk of the distribution, factoring the square
//! flux system with a band LU, rescaling to unit mass, and then checking the
//! residual of the complete overdetermined system.

mod banded;
mod grid;
mod scheme;

pub use grid::Grid2D;
pub use scheme::{assemble, h1, h2, LinearSystem};

use crate::distributions::{cv_rho0, ln_rho0, ln_rhofast_shape, Density1D};
use crate::error::{Error, Result};
use crate::params::DimensionlessParams;
use crate::sweep::fast_cv;
use banded::BandMatrix;

/// Cell averages of the stationary density.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field2D {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Row-major in `i` (r) then `j` (µ).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.flat(i, j)]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dr() * self.grid.dmu()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(r_i, µ_j, f_ij)` in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let g = self.grid;
        (0..g.n_r())
            .flat_map(move |i| (0..g.n_mu()).map(move |j| (g.r(i), g.mu(j), self.get(i, j))))
    }
}

/// Relative tolerance of the residual check, scaled by `1 + ‖M‖₁`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Entries down to this value are treated as roundoff and set to zero.
pub const NEGATIVE_TOL: f64 = -1e-12;

/// Solves the scheme for the stationary density on `grid`.
pub fn solve_steady(dp: &DimensionlessParams, grid: &Grid2D) -> Result<Field2D> {
    let system = assemble(dp, grid)?;
    solve_system(dp, &system)
}

/// Solves an already assembled system; `dp` only picks the pinned cell.
pub fn solve_system(dp: &DimensionlessParams, system: &LinearSystem) -> Result<Field2D> {
    let grid = system.grid;
    let cells = grid.cells();
    let band = grid.bandwidth();
    let pin = pinned_cell(dp, &grid)?;

    let mut a = BandMatrix::zeros(cells, band, band);
    for (row, vec) in system.matrix.outer_iterator().enumerate().take(cells) {
        let (ri, rj) = (row / grid.n_mu(), row % grid.n_mu());
        let u = grid.unknown(ri, rj);
        for (col, &v) in vec.iter() {
            let (ci, cj) = (col / grid.n_mu(), col % grid.n_mu());
            a.add(u, grid.unknown(ci, cj), v);
        }
    }
    let pin_u = grid.unknown(pin.0, pin.1);
    a.clear_row(pin_u);
    a.add(pin_u, pin_u, 1.0);
    let mut b = vec![0.0; cells];
    b[pin_u] = 1.0;
    let x = a.solve(b)?;

    let mut values = vec![0.0; cells];
    for i in 0..grid.n_r() {
        for j in 0..grid.n_mu() {
            values[grid.flat(i, j)] = x[grid.unknown(i, j)];
        }
    }
    let mass = values.iter().sum::<f64>() * grid.dr() * grid.dmu();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::ZeroMass);
    }
    values.iter_mut().for_each(|v| *v /= mass);

    let residual = system
        .residual(&values)
        .iter()
        .map(|r| r * r)
        .sum::<f64>()
        .sqrt();
    let tolerance = RESIDUAL_TOL * (1.0 + system.norm_1());
    if !(residual < tolerance) {
        return Err(Error::SolverFailure {
            residual,
            tolerance,
        });
    }
    for (k, v) in values.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < NEGATIVE_TOL {
                return Err(Error::NonnegativityViolation {
                    i: k / grid.n_mu(),
                    j: k % grid.n_mu(),
                    value: *v,
                });
            }
            *v = 0.0;
        }
    }
    Ok(Field2D { grid, values })
}

/// Cell with the largest `h⁽¹⁾h⁽²⁾`, which sits in the bulk of the
/// solution, so pinning it to one cannot overflow.
fn pinned_cell(dp: &DimensionlessParams, grid: &Grid2D) -> Result<(usize, usize)> {
    let mut best = ((0, 0), f64::NEG_INFINITY);
    for i in 0..grid.n_r() {
        for j in 0..grid.n_mu() {
            let (r, mu) = (grid.r(i), grid.mu(j));
            let v = h1(dp, r, mu)? + h2(dp, r, mu)?;
            if v > best.1 {
                best = ((i, j), v);
            }
        }
    }
    Ok(best.0)
}

/// Flux balance of every cell for a given field (the first `cells` rows of
/// the system applied to it).
pub fn flux_balances(system: &LinearSystem, field: &Field2D) -> Vec<f64> {
    let mut res = system.residual(field.values());
    res.truncate(system.grid.cells());
    res
}

/// `ρ_i = Σ_j f_ij Δµ` on the r cell centres.
pub fn marginal_r(field: &Field2D) -> Density1D {
    let g = field.grid;
    let values = (0..g.n_r())
        .map(|i| (0..g.n_mu()).map(|j| field.get(i, j)).sum::<f64>() * g.dmu())
        .collect();
    Density1D::with_widths(g.r_centers(), vec![g.dr(); g.n_r()], values)
        .expect("field values are valid")
}

/// `j_i = Σ_j µ_j f_ij Δµ / ρ_i`; NaN where `ρ_i < 1e−300`.
pub fn conditional_mean_mu(field: &Field2D) -> Vec<f64> {
    let g = field.grid;
    (0..g.n_r())
        .map(|i| {
            let rho: f64 = (0..g.n_mu()).map(|j| field.get(i, j)).sum::<f64>() * g.dmu();
            if rho < 1e-300 {
                return f64::NAN;
            }
            (0..g.n_mu())
                .map(|j| g.mu(j) * field.get(i, j))
                .sum::<f64>()
                * g.dmu()
                / rho
        })
        .collect()
}

/// Midpoint-rule CV of a sampled density.
pub fn discrete_cv(density: &Density1D) -> Result<f64> {
    density.cv()
}

/// Solver marginal next to the closed-form densities on the same cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalComparison {
    pub rho: Density1D,
    /// ρ₀ and ρ_fast renormalized to unit mass on the r window.
    pub rho0: Density1D,
    pub rhofast: Density1D,
    /// Discrete CV of the solver marginal.
    pub cv_solver: f64,
    /// Discrete CV of ρ₀ on the same cells.
    pub cv_rho0_window: f64,
    /// CVs of ρ₀ and ρ_fast on (0, ∞).
    pub cv_rho0: f64,
    pub cv_rhofast: f64,
    pub l1_rho0: f64,
    pub l1_rhofast: f64,
}

impl MarginalComparison {
    /// `cv_solver / cv_rho0_window`, so that truncation of the window
    /// cancels and the ratio is one without binding.
    pub fn relative_cv(&self) -> f64 {
        self.cv_solver / self.cv_rho0_window
    }
}

fn on_window(rho: &Density1D, ln_f: impl Fn(f64) -> f64) -> Result<Density1D> {
    let grid = rho.grid().to_vec();
    let top = grid
        .iter()
        .map(|&r| ln_f(r))
        .fold(f64::NEG_INFINITY, f64::max);
    let values = grid.iter().map(|&r| (ln_f(r) - top).exp()).collect();
    Density1D::with_widths(grid, rho.widths().to_vec(), values)?.normalized()
}

/// Compares the r marginal of `field` with ρ₀ and ρ_fast.
pub fn compare_marginal(
    dp: &DimensionlessParams,
    field: &Field2D,
    tol: f64,
) -> Result<MarginalComparison> {
    let rho = marginal_r(field).normalized()?;
    let rho0 = on_window(&rho, |r| ln_rho0(dp, r))?;
    let rhofast = on_window(&rho, |r| ln_rhofast_shape(dp, r))?;
    Ok(MarginalComparison {
        cv_solver: rho.cv()?,
        cv_rho0_window: rho0.cv()?,
        cv_rho0: cv_rho0(dp)?,
        cv_rhofast: fast_cv(dp, tol)?,
        l1_rho0: rho.l1_distance(&rho0)?,
        l1_rhofast: rho.l1_distance(&rhofast)?,
        rho,
        rho0,
        rhofast,
    })
}
