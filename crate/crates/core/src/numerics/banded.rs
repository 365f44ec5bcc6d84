//! Banded LU factorisation without pivoting, for the diagonally dominant
//! systems of the implicit finite-difference solvers.

use crate::error::{PricingError, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // row-major, each row stores columns i-kl ..= i+ku
    data: Vec<f64>,
    factored: bool,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)], factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside band");
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// `y = A x` (only valid before factorisation).
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert!(!self.factored);
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.kl);
            let j1 = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in j0..=j1 {
                acc += self.data[self.idx(i, j)] * x[j];
            }
            y[i] = acc;
        }
    }

    /// In-place Doolittle LU within the band.
    pub fn factor(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let piv = self.data[self.idx(k, k)];
            let scale = (self.kl + self.ku + 1) as f64;
            if !piv.is_finite() || piv.abs() < 1e-300 * scale {
                return Err(PricingError::LinearSolve(format!("zero pivot at row {k}")));
            }
            let i1 = (k + self.kl).min(n - 1);
            let j1 = (k + self.ku).min(n - 1);
            for i in k + 1..=i1 {
                let ik = self.idx(i, k);
                let l = self.data[ik] / piv;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=j1 {
                    if j > i + self.ku {
                        break;
                    }
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place after [`factor`](Self::factor).
    pub fn solve(&self, b: &mut [f64]) {
        debug_assert!(self.factored);
        let n = self.n;
        for i in 0..n {
            let j0 = i.saturating_sub(self.kl);
            let mut acc = b[i];
            for j in j0..i {
                acc -= self.data[self.idx(i, j)] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let j1 = (i + self.ku).min(n - 1);
            let mut acc = b[i];
            for j in i + 1..=j1 {
                acc -= self.data[self.idx(i, j)] * b[j];
            }
            b[i] = acc / self.data[self.idx(i, i)];
        }
    }
}
