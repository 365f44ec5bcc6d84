//! Finite-difference checks of computed terms.

use super::grid::TermGrid;
use super::HamSolver;
use crate::model::lambda_gamma;
use crate::numerics::diff::{central_first_4th, central_second_4th, first_derivative_4th};

/// Interior nodes used by the residual checks: `z_lo <= z <= z_max - z_margin`
/// and `u >= u_frac T`. Near `z = 0` and `u = 0` the sources carry the payoff
/// kink, which the difference stencils cannot resolve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRegion {
    pub z_lo: f64,
    pub z_margin: f64,
    pub u_frac: f64,
}

impl Default for ResidualRegion {
    fn default() -> Self {
        Self { z_lo: 0.5, z_margin: 1.0, u_frac: 0.1 }
    }
}

struct Stencils {
    v_u: Vec<f64>,
    nodes: Vec<(usize, usize)>,
}

fn stencils(solver: &HamSolver, values: &[f64], region: &ResidualRegion) -> Stencils {
    let g = solver.grid();
    let (n_z, n_u) = (g.n_z(), g.n_u());
    let mut v_u = vec![0.0; values.len()];
    let mut col = vec![0.0; n_u];
    for k in 0..n_z {
        for n in 0..n_u {
            col[n] = values[n * n_z + k];
        }
        for (n, d) in first_derivative_4th(&col, g.du()).into_iter().enumerate() {
            v_u[n * n_z + k] = d;
        }
    }
    let z_hi = g.z_max() - region.z_margin;
    let u_lo = region.u_frac * solver.expiry();
    let mut nodes = Vec::new();
    for n in 0..n_u {
        if g.u[n] < u_lo {
            continue;
        }
        for k in 2..n_z - 2 {
            if g.z[k] >= region.z_lo && g.z[k] <= z_hi {
                nodes.push((n, k));
            }
        }
    }
    Stencils { v_u, nodes }
}

/// `max |V̂_tau - V̂_zz - Ŝ| / max |Ŝ|` for term `term` against the source
/// built from `prev`, with `V̂ = e^{bz/2 + b^2 tau/4} V̄`.
pub fn recursion_residual(
    solver: &HamSolver,
    prev: &TermGrid,
    term: &TermGrid,
    regime: usize,
    region: &ResidualRegion,
) -> f64 {
    let g = solver.grid();
    let n_z = g.n_z();
    let (_, gamma) = lambda_gamma(solver.model(), regime);
    let b = 1.0 + gamma;
    let half_s2 = 0.5 * solver.model().sigma()[regime].powi(2);
    let vals = &term.values[regime];
    let st = stencils(solver, vals, region);
    let h = g.h();
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    let mut src_cache: Option<(usize, Vec<f64>)> = None;
    for &(n, k) in &st.nodes {
        if src_cache.as_ref().is_none_or(|(m, _)| *m != n) {
            src_cache = Some((n, solver.source_at_node(prev, regime, n)));
        }
        let src = &src_cache.as_ref().unwrap().1;
        let row = &vals[n * n_z..(n + 1) * n_z];
        let tau = g.u[n] * half_s2;
        let w = (0.5 * b * g.z[k] + 0.25 * b * b * tau).exp();
        let lhs = st.v_u[n * n_z + k] / half_s2 - central_second_4th(row, k, h) - b * central_first_4th(row, k, h);
        worst = worst.max((w * (lhs - src[k])).abs());
        peak = peak.max((w * src[k]).abs());
    }
    if peak == 0.0 {
        return worst;
    }
    worst / peak
}

/// Residual of a surface pair in the full coupled system
/// `V_tau - V_zz - b V_z - lambda (V_i - V_j) + (2 e^z / sigma^2) V_z`,
/// relative to `max |V_tau|`. The linear part alone is returned second.
pub fn coupled_residual(solver: &HamSolver, values: [&[f64]; 2], regime: usize, region: &ResidualRegion) -> (f64, f64) {
    let g = solver.grid();
    let n_z = g.n_z();
    let (lambda, gamma) = lambda_gamma(solver.model(), regime);
    let b = 1.0 + gamma;
    let s2 = solver.model().sigma()[regime].powi(2);
    let vi = values[regime];
    let vj = values[1 - regime];
    let st = stencils(solver, vi, region);
    let h = g.h();
    let (mut full, mut lin, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    for &(n, k) in &st.nodes {
        let row = &vi[n * n_z..(n + 1) * n_z];
        let idx = n * n_z + k;
        let v_tau = 2.0 * st.v_u[idx] / s2;
        let v_z = central_first_4th(row, k, h);
        let l = v_tau - central_second_4th(row, k, h) - b * v_z;
        let rhs = lambda * (vi[idx] - vj[idx]) - 2.0 * g.z[k].exp() / s2 * v_z;
        full = full.max((l - rhs).abs());
        lin = lin.max(l.abs());
        scale = scale.max(v_tau.abs());
    }
    if scale == 0.0 {
        return (full, lin);
    }
    (full / scale, lin / scale)
}

/// `max_u |V(u, z_max)| / max |V|` for one regime.
pub fn boundary_decay(term: &TermGrid, regime: usize) -> f64 {
    let n_z = term.n_z();
    let v = &term.values[regime];
    let peak = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let edge = v.chunks(n_z).fold(0.0f64, |a, row| a.max(row[n_z - 1].abs()));
    edge / peak
}

/// True when both regimes vanish identically at `u = 0`.
pub fn initial_condition_is_zero(term: &TermGrid) -> bool {
    (0..2).all(|i| term.row(i, 0).iter().all(|&v| v == 0.0))
}

/// `max |V_z + V|` at `z = 0` over `u >= u_frac T`, relative to `max |V_z|`
/// there. The terms inherit this Robin condition from the kernel; at small
/// `u` its boundary layer is thinner than the grid.
pub fn robin_defect(term: &TermGrid, grid: &super::grid::HamGrid, regime: usize, u_frac: f64) -> f64 {
    let k = grid.origin;
    let u_lo = u_frac * grid.u[grid.n_u() - 1];
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for n in (1..grid.n_u()).filter(|&n| grid.u[n] >= u_lo) {
        let idx = n * term.n_z() + k;
        let dz = term.d_dz[regime][idx];
        worst = worst.max((dz + term.values[regime][idx]).abs());
        scale = scale.max(dz.abs());
    }
    if scale == 0.0 {
        return worst;
    }
    worst / scale
}
