use crate::error::{Error, Result};

/// Uniform cell-centred mesh of `[r_min, r_max] × [mu_min, mu_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    r_min: f64,
    r_max: f64,
    mu_min: f64,
    mu_max: f64,
    n_r: usize,
    n_mu: usize,
}

impl Grid2D {
    pub fn new(
        r_min: f64,
        r_max: f64,
        mu_min: f64,
        mu_max: f64,
        n_r: usize,
        n_mu: usize,
    ) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::invalid(
                "r range",
                format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]"),
            ));
        }
        if !(mu_min > 0.0 && mu_max > mu_min && mu_max.is_finite()) {
            return Err(Error::invalid(
                "mu range",
                format!("need 0 < mu_min < mu_max, got [{mu_min}, {mu_max}]"),
            ));
        }
        if n_r < 2 || n_mu < 2 {
            return Err(Error::invalid(
                "cells",
                "need at least two cells per direction",
            ));
        }
        Ok(Self {
            r_min,
            r_max,
            mu_min,
            mu_max,
            n_r,
            n_mu,
        })
    }

    /// `[0.06, 5] × [0.05, 5]` with 70 × 200 cells.
    pub fn reference() -> Self {
        Self::new(0.06, 5.0, 0.05, 5.0, 70, 200).expect("valid reference grid")
    }

    /// Same bounds, cell counts multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(
            self.r_min,
            self.r_max,
            self.mu_min,
            self.mu_max,
            self.n_r * factor,
            self.n_mu * factor,
        )
    }

    pub fn r_bounds(&self) -> (f64, f64) {
        (self.r_min, self.r_max)
    }

    pub fn mu_bounds(&self) -> (f64, f64) {
        (self.mu_min, self.mu_max)
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_mu(&self) -> usize {
        self.n_mu
    }

    pub fn cells(&self) -> usize {
        self.n_r * self.n_mu
    }

    pub fn dr(&self) -> f64 {
        (self.r_max - self.r_min) / self.n_r as f64
    }

    pub fn dmu(&self) -> f64 {
        (self.mu_max - self.mu_min) / self.n_mu as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_min + self.dr() * (i as f64 + 0.5)
    }

    pub fn mu(&self, j: usize) -> f64 {
        self.mu_min + self.dmu() * (j as f64 + 0.5)
    }

    /// Face `r_{i+1/2}`, for `i` in `-1..n_r` written as `i + 1`.
    pub fn r_face(&self, i_plus_one: usize) -> f64 {
        self.r_min + self.dr() * i_plus_one as f64
    }

    pub fn mu_face(&self, j_plus_one: usize) -> f64 {
        self.mu_min + self.dmu() * j_plus_one as f64
    }

    pub fn r_centers(&self) -> Vec<f64> {
        (0..self.n_r).map(|i| self.r(i)).collect()
    }

    pub fn mu_centers(&self) -> Vec<f64> {
        (0..self.n_mu).map(|j| self.mu(j)).collect()
    }

    /// Row-major position of cell `(i, j)` in field storage.
    pub fn flat(&self, i: usize, j: usize) -> usize {
        i * self.n_mu + j
    }

    /// Position of cell `(i, j)` among the solver unknowns; the shorter
    /// direction varies fastest, which keeps the matrix bandwidth small.
    pub(crate) fn unknown(&self, i: usize, j: usize) -> usize {
        if self.n_r <= self.n_mu {
            j * self.n_r + i
        } else {
            i * self.n_mu + j
        }
    }

    pub(crate) fn bandwidth(&self) -> usize {
        self.n_r.min(self.n_mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_and_faces() {
        let g = Grid2D::reference();
        assert!((g.dr() - 4.94 / 70.0).abs() < 1e-15);
        assert!((g.r(0) - (0.06 + g.dr() / 2.0)).abs() < 1e-15);
        assert!((g.r_face(0) - 0.06).abs() < 1e-15);
        assert!((g.r_face(70) - 5.0).abs() < 1e-12);
        assert!((g.mu(199) - (5.0 - g.dmu() / 2.0)).abs() < 1e-12);
        for i in 0..70 {
            assert!((0.5 * (g.r_face(i) + g.r_face(i + 1)) - g.r(i)).abs() < 1e-13);
        }
    }

    #[test]
    fn unknown_ordering_is_a_permutation() {
        let g = Grid2D::new(1.0, 2.0, 1.0, 2.0, 3, 5).unwrap();
        let mut seen: Vec<usize> = (0..3)
            .flat_map(|i| (0..5).map(move |j| (i, j)))
            .map(|(i, j)| g.unknown(i, j))
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..15).collect::<Vec<_>>());
        assert_eq!(g.bandwidth(), 3);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid2D::new(0.0, 1.0, 0.1, 1.0, 4, 4).is_err());
        assert!(Grid2D::new(0.1, 1.0, 0.1, 0.1, 4, 4).is_err());
        assert!(Grid2D::new(0.1, 1.0, 0.1, 1.0, 1, 4).is_err());
    }
}
