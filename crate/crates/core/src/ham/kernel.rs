//! Discrete Duhamel operators for one regime.
//!
//! Undoing the `V̂ = e^{bz/2 + b^2 tau/4} V̄` substitution inside the
//! convolution gives a kernel acting directly on the `V̄` source, with
//! `b = 1 + gamma` and `d = tau - tau'`:
//!
//! * direct: Gaussian in `xi` with mean `z + b d` and variance `2d`
//! * image: `e^{-bz}` times a Gaussian with mean `b d - z`
//! * Robin: `c e^{gamma (xi - d) - z} erfc((z + xi) / (2 sqrt d) - c sqrt d)`
//!
//! The source is treated as a piecewise cubic in `xi` (four-node Lagrange
//! stencils). Narrow Gaussians integrate against it in closed form, wide
//! ones and the Robin part by Gauss–Legendre per cell.

use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

use super::greens::GreensVariant;
use super::grid::HamGrid;
use crate::numerics::gauss::GaussLegendre;
use crate::numerics::special::{erf_diff, erfc};

const GAUSS_WIDTH: f64 = 10.0;

/// Weights of one target node over a contiguous run of source nodes.
#[derive(Debug, Clone, Default)]
pub(crate) struct Row {
    pub lo: usize,
    pub w: Vec<f64>,
}

impl Row {
    #[inline]
    pub fn dot(&self, src: &[f64]) -> f64 {
        self.w.iter().zip(&src[self.lo..]).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    /// `rows[(d - 1) * n_q + q][k]` for lag `d` intervals and time node `q`.
    rows: Vec<Vec<Row>>,
    n_q: usize,
    /// Gauss–Legendre fractions of an interval and their weights (sum 1).
    pub theta: Vec<f64>,
    pub weight: Vec<f64>,
}

impl Kernel {
    pub fn build(grid: &HamGrid, sigma: f64, gamma: f64, variant: GreensVariant, n_time: usize, n_robin: usize) -> Self {
        let tgl = GaussLegendre::new(n_time);
        let (theta, weight): (Vec<f64>, Vec<f64>) = tgl.mapped(0.0, 1.0).unzip();
        let rgl = GaussLegendre::new(n_robin);
        let cgl = GaussLegendre::new(6);
        let n_q = theta.len();
        let du = grid.du();
        let half_s2 = 0.5 * sigma * sigma;
        let jobs: Vec<(usize, usize)> =
            (1..grid.n_u()).flat_map(|d| (0..n_q).map(move |q| (d, q))).collect();
        let rows = jobs
            .par_iter()
            .map(|&(d, q)| {
                let delta = (d as f64 - theta[q]) * du * half_s2;
                (0..grid.n_z()).map(|k| row(grid, grid.z[k], delta, gamma, variant, &rgl, &cgl)).collect()
            })
            .collect();
        Self { rows, n_q, theta, weight }
    }

    #[inline]
    pub fn row(&self, d: usize, q: usize, k: usize) -> &Row {
        &self.rows[(d - 1) * self.n_q + q][k]
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }
}

/// Coefficients of the cubic Lagrange basis on nodes `0, 1, 2, 3` in powers of `x`.
const LAGRANGE: [[f64; 4]; 4] = [
    [1.0, -11.0 / 6.0, 1.0, -1.0 / 6.0],
    [0.0, 3.0, -2.5, 0.5],
    [0.0, -1.5, 2.0, -0.5],
    [0.0, 1.0 / 3.0, -0.5, 1.0 / 6.0],
];

/// First node of the four-node stencil used on cell `j`.
#[inline]
fn stencil_start(j: usize, n_nodes: usize) -> usize {
    j.saturating_sub(1).min(n_nodes - 4)
}

#[inline]
fn basis(x: f64) -> [f64; 4] {
    LAGRANGE.map(|c| c[0] + x * (c[1] + x * (c[2] + x * c[3])))
}

/// Adds `amp * int N(xi; mean, s^2) L_p(xi) dxi` into `acc` for cells in
/// `cells`, with `L_p` the cubic Lagrange basis of each cell's stencil.
#[allow(clippy::too_many_arguments)]
fn gauss_cubic(acc: &mut [f64], lo: usize, xi: &[f64], cells: (usize, usize), mean: f64, s: f64, amp: f64, gl: &GaussLegendre) {
    let h = xi[1] - xi[0];
    let n = xi.len();
    let norm = 1.0 / (s * (2.0 * PI).sqrt());
    let dens = |x: f64| norm * (-(x - mean).powi(2) / (2.0 * s * s)).exp();
    for j in cells.0..cells.1 {
        let p0 = stencil_start(j, n);
        let (a, b) = (xi[j], xi[j + 1]);
        let mut w = [0.0; 4];
        if s >= 2.0 * h {
            // the Gaussian is smooth on the scale of a cell
            for (x, wq) in gl.mapped(a, b) {
                let f = wq * dens(x);
                for (wk, l) in w.iter_mut().zip(basis((x - xi[p0]) / h)) {
                    *wk += f * l;
                }
            }
        } else {
            // moments of t = xi - mean over the cell, then shifted to x = (xi - xi_p0)/h
            let (na, nb) = (dens(a), dens(b));
            let (ta, tb) = (a - mean, b - mean);
            let s2 = s * s;
            let j0 = 0.5 * erf_diff(ta / (s * SQRT_2), tb / (s * SQRT_2));
            let j1 = s2 * (na - nb);
            let j2 = s2 * j0 + s2 * (ta * na - tb * nb);
            let j3 = 2.0 * s2 * j1 + s2 * (ta * ta * na - tb * tb * nb);
            let o = mean - xi[p0];
            let m = [
                j0,
                (j1 + o * j0) / h,
                (j2 + 2.0 * o * j1 + o * o * j0) / (h * h),
                (j3 + 3.0 * o * j2 + 3.0 * o * o * j1 + o * o * o * j0) / (h * h * h),
            ];
            for (wk, c) in w.iter_mut().zip(&LAGRANGE) {
                *wk = c.iter().zip(&m).map(|(a, b)| a * b).sum();
            }
        }
        for (k, wk) in w.iter().enumerate() {
            acc[p0 + k - lo] += amp * wk;
        }
    }
}

fn cell_range(xi: &[f64], mean: f64, s: f64) -> Option<(usize, usize)> {
    let h = xi[1] - xi[0];
    let n_cells = xi.len() - 1;
    let a = ((mean - GAUSS_WIDTH * s - xi[0]) / h).floor();
    let b = ((mean + GAUSS_WIDTH * s - xi[0]) / h).ceil();
    if b <= 0.0 || a >= n_cells as f64 {
        return None;
    }
    Some((a.max(0.0) as usize, (b as usize).min(n_cells)))
}

fn row(
    grid: &HamGrid,
    z: f64,
    delta: f64,
    gamma: f64,
    variant: GreensVariant,
    rgl: &GaussLegendre,
    cgl: &GaussLegendre,
) -> Row {
    let xi = grid.xi();
    let h = grid.h();
    let b = 1.0 + gamma;
    let c = 0.5 * (1.0 - gamma);
    let s = (2.0 * delta).sqrt();
    let direct = cell_range(xi, z + b * delta, s);
    let image = cell_range(xi, b * delta - z, s);
    let sd = delta.sqrt();
    let robin_f = |x: f64| {
        let e = variant.robin_exponent(c, delta, z + x) + 0.5 * b * (x - z) - 0.25 * b * b * delta;
        c * e.exp() * erfc((z + x) / (2.0 * sd) - c * sd)
    };
    let mut robin_cells = 0;
    if c != 0.0 {
        // tail is monotone once past the erfc shoulder and the e^{gamma xi} ridge
        while robin_cells < xi.len() - 1 {
            let x = xi[robin_cells];
            let arg = (z + x) / (2.0 * sd) - c * sd;
            if arg > 3.0 && z + x > 2.0 * gamma.max(0.0) * delta && (robin_f(x) * h).abs() < 1e-18 {
                break;
            }
            robin_cells += 1;
        }
    }
    let mut lo = usize::MAX;
    let mut hi = 0usize;
    for (a, e) in [direct, image].into_iter().flatten() {
        lo = lo.min(a);
        hi = hi.max(e);
    }
    if robin_cells > 0 {
        lo = 0;
        hi = hi.max(robin_cells);
    }
    if lo == usize::MAX {
        return Row::default();
    }
    let n = xi.len();
    let lo = stencil_start(lo, n);
    let hi = (stencil_start(hi - 1, n) + 3).max(hi);
    let mut w = vec![0.0; hi - lo + 1];
    if let Some(cells) = direct {
        gauss_cubic(&mut w, lo, xi, cells, z + b * delta, s, 1.0, cgl);
    }
    if let Some(cells) = image {
        gauss_cubic(&mut w, lo, xi, cells, b * delta - z, s, (-b * z).exp(), cgl);
    }
    for j in 0..robin_cells {
        let p0 = stencil_start(j, n);
        for (x, wq) in rgl.mapped(xi[j], xi[j + 1]) {
            let f = robin_f(x) * wq;
            for (k, l) in basis((x - xi[p0]) / h).into_iter().enumerate() {
                w[p0 + k - lo] += f * l;
            }
        }
    }
    Row { lo, w }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ham::greens::greens_function;

    fn grid() -> HamGrid {
        HamGrid::new(-3.0, 9.0, 481, 1.0, 21).unwrap()
    }

    #[test]
    fn weights_match_direct_quadrature_of_the_kernel() {
        let g = grid();
        let (gamma, sigma) = (2.5, 0.2);
        let k = Kernel::build(&g, sigma, gamma, GreensVariant::WithTau, 2, 8);
        let b = 1.0 + gamma;
        let gl = GaussLegendre::new(32);
        for (d, kz) in [(1, g.origin + 20), (5, g.origin + 3), (20, g.origin + 100), (3, 10)] {
            let z = g.z[kz];
            let delta = (d as f64 - k.theta[0]) * g.du() * 0.5 * sigma * sigma;
            let cube: Vec<f64> = g.xi().iter().map(|x| x * x * x).collect();
            let got = k.row(d, 0, kz).dot(&cube);
            let want_lin = {
                // cubics are reproduced exactly
                let mut acc = 0.0;
                for j in 0..g.xi().len() - 1 {
                    let (a, e) = (g.xi()[j], g.xi()[j + 1]);
                    acc += gl.integrate(a, e, |x| {
                        let w = (b * (x - z) / 2.0 - b * b * delta / 4.0).exp();
                        greens_function(delta, z, x, gamma, GreensVariant::WithTau).unwrap() * w * x * x * x
                    });
                }
                acc
            };
            assert!((got - want_lin).abs() < 1e-8 * want_lin.abs().max(1.0), "{d} {z}: {got} vs {want_lin}");
        }
    }

    #[test]
    fn unit_gamma_has_no_robin_tail() {
        let g = grid();
        let k = Kernel::build(&g, 0.3, 1.0, GreensVariant::WithTau, 2, 8);
        let r = k.row(1, 0, g.n_z() - 1);
        // target at the far end sees only a narrow Gaussian band
        assert!(r.lo > 0 && r.w.len() < 100);
    }
}
