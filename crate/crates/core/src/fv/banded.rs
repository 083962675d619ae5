//! Band LU factorization without pivoting.
//!
//! Used for the column diagonally dominant matrices produced by the
//! finite-volume scheme, for which elimination without row exchanges is
//! stable.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.lower >= i && j <= i + self.upper);
        i * (self.lower + self.upper + 1) + (j + self.lower - i)
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    pub(crate) fn clear_row(&mut self, i: usize) {
        let w = self.lower + self.upper + 1;
        self.data[i * w..(i + 1) * w].fill(0.0);
    }

    /// Factorizes in place and solves `A x = b`.
    pub(crate) fn solve(mut self, mut b: Vec<f64>) -> Result<Vec<f64>> {
        let n = self.n;
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SolverFailure {
                    residual: f64::INFINITY,
                    tolerance: 0.0,
                });
            }
            let row_end = (k + self.upper + 1).min(n);
            for i in k + 1..(k + self.lower + 1).min(n) {
                let ik = self.slot(i, k);
                let factor = self.data[ik] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.data[ik] = factor;
                for j in k + 1..row_end {
                    let kj = self.data[self.slot(k, j)];
                    let ij = self.slot(i, j);
                    self.data[ij] -= factor * kj;
                }
                b[i] -= factor * b[k];
            }
        }
        for k in (0..n).rev() {
            let row_end = (k + self.upper + 1).min(n);
            let mut acc = b[k];
            for j in k + 1..row_end {
                acc -= self.data[self.slot(k, j)] * b[j];
            }
            b[k] = acc / self.data[self.slot(k, k)];
        }
        Ok(b)
    }
}
