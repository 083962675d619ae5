//! The h-reformulated drift-diffusion operator and its conservative
//! discretization.

use sprs::{CsMat, TriMat};

use super::grid::Grid2D;
use crate::error::{Error, Result};
use crate::params::{DimensionlessParams, NoiseLaw};

fn require_quadratic(dp: &DimensionlessParams) -> Result<f64> {
    match dp.law() {
        NoiseLaw::Quadratic => Ok(dp.strength()),
        NoiseLaw::Linear => Err(Error::Unsupported(
            "the finite-volume solver handles quadratic noise only".into(),
        )),
    }
}

/// `ln h⁽¹⁾(r, µ) = −((1 + pγµ)δ + 2) ln r − δ/r`.
pub fn h1(dp: &DimensionlessParams, r: f64, mu: f64) -> Result<f64> {
    let delta = require_quadratic(dp)?;
    if !(r > 0.0 && mu > 0.0) {
        return Err(Error::Domain {
            op: "h1",
            value: r.min(mu),
        });
    }
    Ok(ln_h1(delta, dp.gamma(), dp.p(), r, mu))
}

/// `ln h⁽²⁾(r, µ) = −((1 + γr)δκ/ν + 2) ln µ − δκ/(νµ)`.
pub fn h2(dp: &DimensionlessParams, r: f64, mu: f64) -> Result<f64> {
    let delta = require_quadratic(dp)?;
    if !(r > 0.0 && mu > 0.0) {
        return Err(Error::Domain {
            op: "h2",
            value: r.min(mu),
        });
    }
    Ok(ln_h2(delta * dp.kappa() / dp.nu(), dp.gamma(), r, mu))
}

fn ln_h1(delta: f64, gamma: f64, p: f64, r: f64, mu: f64) -> f64 {
    -((1.0 + p * mu * gamma) * delta + 2.0) * r.ln() - delta / r
}

fn ln_h2(ratio: f64, gamma: f64, r: f64, mu: f64) -> f64 {
    -((1.0 + r * gamma) * ratio + 2.0) * mu.ln() - ratio / mu
}

/// The overdetermined system `M f = B`: one flux balance per cell (rows
/// in [`Grid2D::flat`] order) followed by the mass row.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub grid: Grid2D,
    /// `(cells + 1) × cells`, columns in [`Grid2D::flat`] order.
    pub matrix: CsMat<f64>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    /// Largest absolute column sum.
    pub fn norm_1(&self) -> f64 {
        let csc = self.matrix.to_csc();
        csc.outer_iterator()
            .map(|col| col.iter().map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `M f − B`.
    pub fn residual(&self, f: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.rhs.iter().map(|b| -b).collect();
        for (row, vec) in self.matrix.outer_iterator().enumerate() {
            out[row] += vec.iter().map(|(c, v)| v * f[c]).sum::<f64>();
        }
        out
    }
}

/// Transmission coefficients of one face: the flux from cell A to cell B
/// is `t_a f_A − t_b f_B`.
fn face(scale: f64, ln_face: f64, ln_a: f64, ln_b: f64) -> (f64, f64) {
    (
        scale * (ln_face - ln_a).exp(),
        scale * (ln_face - ln_b).exp(),
    )
}

/// Assembles the zero-flux finite-volume scheme with the unit-mass row.
pub fn assemble(dp: &DimensionlessParams, grid: &Grid2D) -> Result<LinearSystem> {
    let delta = require_quadratic(dp)?;
    let (gamma, p) = (dp.gamma(), dp.p());
    let ratio = delta * dp.kappa() / dp.nu();
    let (nr, nm) = (grid.n_r(), grid.n_mu());
    let (dr, dmu) = (grid.dr(), grid.dmu());
    let cells = grid.cells();

    let mut tri = TriMat::with_capacity((cells + 1, cells), 6 * cells);
    let mut couple = |a: (usize, usize), b: (usize, usize), (ta, tb): (f64, f64)| -> Result<()> {
        if !(ta.is_finite() && tb.is_finite()) {
            return Err(Error::Assembly { i: a.0, j: a.1 });
        }
        let (ka, kb) = (grid.flat(a.0, a.1), grid.flat(b.0, b.1));
        tri.add_triplet(ka, ka, ta);
        tri.add_triplet(ka, kb, -tb);
        tri.add_triplet(kb, ka, -ta);
        tri.add_triplet(kb, kb, tb);
        Ok(())
    };

    for j in 0..nm {
        let mu = grid.mu(j);
        for i in 0..nr - 1 {
            let rf = grid.r_face(i + 1);
            let t = face(
                dmu / dr * rf * rf,
                ln_h1(delta, gamma, p, rf, mu),
                ln_h1(delta, gamma, p, grid.r(i), mu),
                ln_h1(delta, gamma, p, grid.r(i + 1), mu),
            );
            couple((i, j), (i + 1, j), t)?;
        }
    }
    for i in 0..nr {
        let r = grid.r(i);
        for j in 0..nm - 1 {
            let mf = grid.mu_face(j + 1);
            let t = face(
                dp.nu() * dr / dmu * mf * mf,
                ln_h2(ratio, gamma, r, mf),
                ln_h2(ratio, gamma, r, grid.mu(j)),
                ln_h2(ratio, gamma, r, grid.mu(j + 1)),
            );
            couple((i, j), (i, j + 1), t)?;
        }
    }
    let cell_area = dr * dmu;
    for k in 0..cells {
        tri.add_triplet(cells, k, cell_area);
    }
    let mut rhs = vec![0.0; cells + 1];
    rhs[cells] = 1.0;
    Ok(LinearSystem {
        grid: *grid,
        matrix: tri.to_csr(),
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp(gamma: f64, p: f64, kappa: f64, nu: f64) -> DimensionlessParams {
        DimensionlessParams::quadratic(8.0, gamma, p, kappa, nu).unwrap()
    }

    #[test]
    fn h_values() {
        assert!((h1(&dp(0.0, 1.0, 1.0, 1.0), 1.0, 3.0).unwrap() + 8.0).abs() < 1e-15);
        assert!((h2(&dp(0.0, 1.0, 1.0, 1.0), 3.0, 1.0).unwrap() + 8.0).abs() < 1e-15);
        let free = dp(0.0, 1.0, 1.0, 1.0);
        assert_eq!(h1(&free, 0.7, 0.1).unwrap(), h1(&free, 0.7, 9.0).unwrap());
        for (a, b) in [(0.3, 1.7), (2.0, 0.5)] {
            assert_eq!(h1(&free, a, b).unwrap(), h2(&free, b, a).unwrap());
        }
        let lin = DimensionlessParams::linear(2.0, 1.0, 1.0).unwrap();
        assert!(matches!(h1(&lin, 1.0, 1.0), Err(Error::Unsupported(_))));
        assert!(h1(&free, 0.0, 1.0).is_err());
    }

    /// Central differences of the zero-flux identities.
    #[test]
    fn h_functions_balance_drift() {
        let d = dp(1.3, 0.7, 2.0, 0.5);
        let (delta, gamma, p, kappa, nu) = (8.0, 1.3, 0.7, 2.0, 0.5);
        let eps = 1e-6;
        for (r, mu) in [(0.5, 0.8), (1.2, 0.3), (2.0, 2.0)] {
            // r-direction: ∂_r(r² h1) − δ(1 − pγµr − r) h1 = 0
            let g = |x: f64| x * x * h1(&d, x, mu).unwrap().exp();
            let lhs = (g(r + eps) - g(r - eps)) / (2.0 * eps);
            let drift = delta * (1.0 - p * gamma * mu * r - r) * h1(&d, r, mu).unwrap().exp();
            assert!((lhs - drift).abs() < 1e-6 * drift.abs().max(lhs.abs()).max(1e-300));
            // µ-direction: ∂_µ(νµ² h2) − δκ(1 − γrµ − µ) h2 = 0
            let g = |x: f64| nu * x * x * h2(&d, r, x).unwrap().exp();
            let lhs = (g(mu + eps) - g(mu - eps)) / (2.0 * eps);
            let drift = delta * kappa * (1.0 - gamma * r * mu - mu) * h2(&d, r, mu).unwrap().exp();
            assert!((lhs - drift).abs() < 1e-6 * drift.abs().max(lhs.abs()).max(1e-300));
        }
    }

    #[test]
    fn free_r_equilibrium_matches_rho0_shape() {
        // r² h1 ∂_r(ρ₀-shape / h1) = 0 when γ = 0.
        let d = dp(0.0, 1.0, 1.0, 1.0);
        let eps = 1e-6;
        for r in [0.3, 1.0, 2.5] {
            let q = |x: f64| (-(10.0) * x.ln() - 8.0 / x - h1(&d, x, 1.0).unwrap()).exp();
            let deriv = (q(r + eps) - q(r - eps)) / (2.0 * eps);
            assert!(deriv.abs() < 1e-9);
        }
    }

    #[test]
    fn structure_of_the_system() {
        let grid = Grid2D::new(0.2, 3.0, 0.2, 3.0, 6, 7).unwrap();
        let sys = assemble(&dp(1.0, 1.0, 1.0, 1.0), &grid).unwrap();
        let cells = grid.cells();
        assert_eq!(sys.matrix.shape(), (cells + 1, cells));
        // Telescoping: each column of the flux block sums to zero.
        let csc = sys.matrix.to_csc();
        for col in csc.outer_iterator() {
            let (sum, scale) = col
                .iter()
                .filter(|(row, _)| *row < cells)
                .fold((0.0, 0.0f64), |(s, m), (_, v)| (s + v, m.max(v.abs())));
            assert!(sum.abs() <= 1e-13 * scale);
        }
        // Interior rows touch five unknowns, corners three.
        let nnz = |i: usize, j: usize| sys.matrix.outer_view(grid.flat(i, j)).unwrap().nnz();
        assert_eq!(nnz(2, 3), 5);
        assert_eq!(nnz(0, 3), 4);
        assert_eq!(nnz(0, 0), 3);
        assert_eq!(sys.matrix.outer_view(cells).unwrap().nnz(), cells);
    }

    #[test]
    fn product_lies_in_kernel_without_binding() {
        let grid = Grid2D::new(0.1, 4.0, 0.1, 4.0, 12, 9).unwrap();
        let d = dp(0.0, 1.0, 1.0, 1.0);
        let sys = assemble(&d, &grid).unwrap();
        let mut v = vec![0.0; grid.cells()];
        for i in 0..grid.n_r() {
            for j in 0..grid.n_mu() {
                let (r, mu) = (grid.r(i), grid.mu(j));
                v[grid.flat(i, j)] = (h1(&d, r, mu).unwrap() + h2(&d, r, mu).unwrap()).exp();
            }
        }
        let res = sys.residual(&v);
        let scale = v.iter().copied().fold(0.0, f64::max);
        for k in 0..grid.cells() {
            assert!(res[k].abs() < 1e-12 * scale, "row {k}: {}", res[k]);
        }
    }
}
