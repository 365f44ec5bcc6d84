use crate::error::{PricingError, Result};
use crate::numerics::diff::first_derivative_4th;

/// Common lattice of the series terms: uniform `z` with `z = 0` on a node,
/// uniform time to maturity `u` on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamGrid {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    /// Index of the node at `z = 0`.
    pub origin: usize,
}

impl HamGrid {
    pub fn new(z_min: f64, z_max: f64, n_z: usize, expiry: f64, n_u: usize) -> Result<Self> {
        if !(z_max > z_min) || n_z < 8 || n_u < 3 {
            return Err(PricingError::InvalidConfig("ham grid needs z_max > z_min, n_z >= 8, n_u >= 3".into()));
        }
        if !(z_min <= 0.0 && z_max > 0.0) {
            return Err(PricingError::InvalidConfig("ham grid must contain z = 0".into()));
        }
        let h = (z_max - z_min) / (n_z - 1) as f64;
        let origin = ((-z_min) / h).round() as usize;
        let z: Vec<f64> = (0..n_z).map(|k| (k as f64 - origin as f64) * h).collect();
        let du = expiry / (n_u - 1) as f64;
        let u = (0..n_u).map(|n| n as f64 * du).collect();
        Ok(Self { z, u, origin })
    }

    pub fn n_z(&self) -> usize {
        self.z.len()
    }

    pub fn n_u(&self) -> usize {
        self.u.len()
    }

    pub fn h(&self) -> f64 {
        self.z[1] - self.z[0]
    }

    pub fn du(&self) -> f64 {
        self.u[1] - self.u[0]
    }

    pub fn z_max(&self) -> f64 {
        *self.z.last().unwrap()
    }

    /// Source nodes `xi >= 0`.
    pub fn xi(&self) -> &[f64] {
        &self.z[self.origin..]
    }
}

/// Series term `m` on the grid for both regimes.
#[derive(Debug, Clone, PartialEq)]
pub struct TermGrid {
    pub m: usize,
    /// `values[i][n * n_z + k] = V_i^m(u_n, z_k)`
    pub values: [Vec<f64>; 2],
    /// Matching `dV_i^m / dz`.
    pub d_dz: [Vec<f64>; 2],
    n_z: usize,
}

impl TermGrid {
    pub fn zeros(m: usize, grid: &HamGrid) -> Self {
        let len = grid.n_z() * grid.n_u();
        Self { m, values: [vec![0.0; len], vec![0.0; len]], d_dz: [vec![0.0; len], vec![0.0; len]], n_z: grid.n_z() }
    }

    pub fn from_values(m: usize, grid: &HamGrid, values: [Vec<f64>; 2]) -> Result<Self> {
        let len = grid.n_z() * grid.n_u();
        if values.iter().any(|v| v.len() != len) {
            return Err(PricingError::GridMismatch(format!("term values need {len} entries")));
        }
        let h = grid.h();
        let n_z = grid.n_z();
        let o = grid.origin;
        let d_dz = [0, 1].map(|i| {
            let mut d = vec![0.0; len];
            for n in 0..grid.n_u() {
                let row = &values[i][n * n_z..(n + 1) * n_z];
                let out = &mut d[n * n_z..(n + 1) * n_z];
                // one-sided at z = 0: the half-line solution has no smooth continuation to z < 0
                if o >= 4 {
                    out[..=o].copy_from_slice(&first_derivative_4th(&row[..=o], h));
                } else {
                    out[..=o].copy_from_slice(&first_derivative_4th(row, h)[..=o]);
                }
                out[o..].copy_from_slice(&first_derivative_4th(&row[o..], h));
            }
            d
        });
        Ok(Self { m, values, d_dz, n_z })
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn row(&self, regime: usize, n: usize) -> &[f64] {
        &self.values[regime][n * self.n_z..(n + 1) * self.n_z]
    }

    pub fn at(&self, regime: usize, n: usize, k: usize) -> f64 {
        self.values[regime][n * self.n_z + k]
    }

    /// Sup norm over the half-line part `z >= 0` of the grid.
    pub fn half_line_norm(&self, grid: &HamGrid, regime: usize) -> f64 {
        let mut m: f64 = 0.0;
        for n in 0..grid.n_u() {
            for k in grid.origin..grid.n_z() {
                m = m.max(self.at(regime, n, k).abs());
            }
        }
        m
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|&x| x == 0.0))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| c * x).collect::<Vec<_>>();
        Self {
            m: self.m,
            values: [s(&self.values[0]), s(&self.values[1])],
            d_dz: [s(&self.d_dz[0]), s(&self.d_dz[1])],
            n_z: self.n_z,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_a_node() {
        let g = HamGrid::new(-3.0, 9.2, 401, 1.0, 101).unwrap();
        assert_eq!(g.z[g.origin], 0.0);
        assert_eq!(g.n_z(), 401);
        assert!((g.u[100] - 1.0).abs() < 1e-14);
    }
}
