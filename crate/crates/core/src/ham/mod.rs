//! Homotopy-analysis series for the floating-strike Asian put.
//!
//! In `z = -ln(A/S)` and `tau_i = u sigma_i^2 / 2` the reduced value
//! satisfies `L_i V_i = lambda_i (V_i - V_j) - (2 e^z / sigma_i^2) dV_i/dz`
//! with `L = d_tau - d_zz - (1 + gamma_i) d_z`. The series keeps `L` on the
//! left and feeds the right-hand side of term `m - 1` in as a source, so
//! every term `m >= 1` solves a constant-coefficient problem with zero
//! initial data. That problem is solved by convolution with the half-line
//! Robin kernel of [`greens`].
//!
//! Initial guess: the regime-switching European put with spot `T` and
//! strike `e^{-z}`, divided by `T`. At `u = 0` it reduces to the payoff
//! `(e^{-z}/T - 1)^+` and it vanishes as `z -> inf`.

pub mod greens;
pub mod grid;
mod kernel;
pub mod residual;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::european::{EuropeanSlice, MuConvention};
use crate::model::{lambda_gamma, AsianOptionSpec, MarketState, OptionStyle, RegimeModel};
use crate::numerics::interp::{hermite, pchip_slopes, Pchip};
use crate::numerics::special::bs_put;
use crate::result::{Diagnostics, Method, PriceResult};

pub use greens::{greens_function, GreensVariant};
pub use grid::{HamGrid, TermGrid};
use kernel::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalMode {
    /// Term 0 is the initial guess as is.
    LiteralZero,
    /// Term 0 carries the payoff `(e^{-z}/T - 1)^+` at `u = 0`.
    #[default]
    Payoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    #[default]
    EuropeanRs,
    Zero,
}

/// Weight of term `m` in the assembled sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesNormalization {
    /// `1 / m!`
    #[default]
    Factorial,
    /// `1`: the weight under which the recursion reproduces the coupled system exactly.
    Unit,
}

impl SeriesNormalization {
    pub fn weight(self, m: usize) -> f64 {
        match self {
            SeriesNormalization::Factorial => 1.0 / (1..=m).map(|k| k as f64).product::<f64>(),
            SeriesNormalization::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HamQuadrature {
    /// Gauss–Legendre nodes per time interval.
    pub time_nodes: usize,
    /// Gauss–Legendre nodes per `xi` cell for the Robin part of the kernel.
    pub robin_nodes: usize,
    /// Truncation of the Fourier integral in the initial guess.
    pub rho_max: f64,
}

impl Default for HamQuadrature {
    fn default() -> Self {
        Self { time_nodes: 2, robin_nodes: 8, rho_max: 200.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HamConfig {
    pub m_trunc: usize,
    pub n_z: usize,
    pub n_u: usize,
    /// Defaults to `-ln(20 T)`.
    pub z_min: Option<f64>,
    /// Defaults to `-ln(1e-4)`.
    pub z_max: Option<f64>,
    pub quadrature: HamQuadrature,
    pub terminal_mode: TerminalMode,
    pub initial_guess: InitialGuess,
    pub greens_variant: GreensVariant,
    pub normalization: SeriesNormalization,
    pub mu_convention: MuConvention,
}

impl Default for HamConfig {
    fn default() -> Self {
        Self {
            m_trunc: 4,
            n_z: 401,
            n_u: 101,
            z_min: None,
            z_max: None,
            quadrature: HamQuadrature::default(),
            terminal_mode: TerminalMode::default(),
            initial_guess: InitialGuess::default(),
            greens_variant: GreensVariant::default(),
            normalization: SeriesNormalization::default(),
            mu_convention: MuConvention::default(),
        }
    }
}

impl HamConfig {
    pub fn z_bounds(&self, expiry: f64) -> (f64, f64) {
        (self.z_min.unwrap_or(-(20.0 * expiry).ln()), self.z_max.unwrap_or(-(1e-4f64).ln()))
    }

    pub fn validate(&self, expiry: f64) -> Result<()> {
        let bad = |m: &str| Err(PricingError::InvalidConfig(m.into()));
        if self.m_trunc < 1 {
            return bad("m_trunc must be >= 1");
        }
        let (lo, hi) = self.z_bounds(expiry);
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return bad("z_max must exceed z_min");
        }
        if self.n_z < 8 || self.n_u < 3 {
            return bad("ham grid needs n_z >= 8 and n_u >= 3");
        }
        let q = &self.quadrature;
        if q.time_nodes == 0 || q.robin_nodes == 0 || !(q.rho_max > 0.0) {
            return bad("ham quadrature needs positive node counts and rho_max");
        }
        Ok(())
    }
}

/// Term 0 from the initial guess alone.
pub fn initial_guess(
    model: &RegimeModel,
    grid: &HamGrid,
    expiry: f64,
    mode: InitialGuess,
    config: &HamConfig,
) -> Result<TermGrid> {
    model.require_two_states()?;
    if mode == InitialGuess::Zero {
        return Ok(TermGrid::zeros(0, grid));
    }
    let n_z = grid.n_z();
    let rows: Vec<[Vec<f64>; 2]> = grid
        .u
        .par_iter()
        .map(|&u| -> Result<[Vec<f64>; 2]> {
            if u == 0.0 {
                let pay: Vec<f64> = grid.z.iter().map(|z| ((-z).exp() / expiry - 1.0).max(0.0)).collect();
                return Ok([pay.clone(), pay]);
            }
            let mut out = [vec![0.0; n_z], vec![0.0; n_z]];
            for (i, row) in out.iter_mut().enumerate() {
                let slice = EuropeanSlice::new(model, i, u, config.quadrature.rho_max, config.mu_convention)?;
                for (v, z) in row.iter_mut().zip(&grid.z) {
                    *v = slice.put(expiry, (-z).exp()).max(0.0) / expiry;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let values = [0, 1].map(|i| rows.iter().flat_map(|r| r[i].iter().copied()).collect::<Vec<_>>());
    TermGrid::from_values(0, grid, values)
}

/// Cubic-in-`u` reader of gridded data, for sources between time nodes.
struct TimeInterp<'a> {
    u: &'a [f64],
    values: &'a [f64],
    slopes: Vec<f64>,
    n_z: usize,
}

impl<'a> TimeInterp<'a> {
    fn new(u: &'a [f64], values: &'a [f64], n_z: usize) -> Self {
        let n_u = u.len();
        let mut slopes = vec![0.0; values.len()];
        let mut col = vec![0.0; n_u];
        for k in 0..n_z {
            for n in 0..n_u {
                col[n] = values[n * n_z + k];
            }
            for (n, s) in pchip_slopes(u, &col).into_iter().enumerate() {
                slopes[n * n_z + k] = s;
            }
        }
        Self { u, values, slopes, n_z }
    }

    fn at(&self, l: usize, x: f64, k: usize) -> f64 {
        let (a, b) = (l * self.n_z + k, (l + 1) * self.n_z + k);
        hermite(self.u[l], self.u[l + 1], self.values[a], self.values[b], self.slopes[a], self.slopes[b], x)
    }
}

/// Precomputed operators for one model, grid and kernel choice.
pub struct HamSolver {
    model: RegimeModel,
    expiry: f64,
    config: HamConfig,
    grid: HamGrid,
    kernels: [Kernel; 2],
}

impl std::fmt::Debug for HamSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamSolver").field("expiry", &self.expiry).field("config", &self.config).finish()
    }
}

impl HamSolver {
    pub fn new(model: &RegimeModel, expiry: f64, config: &HamConfig) -> Result<Self> {
        model.require_two_states()?;
        if model.q().iter().any(|&q| q != 0.0) {
            return Err(PricingError::NotApplicable("the series solver assumes zero dividend yields".into()));
        }
        if !(expiry > 0.0 && expiry.is_finite()) {
            return Err(PricingError::InvalidOption(format!("expiry {expiry} not > 0")));
        }
        config.validate(expiry)?;
        let (z_min, z_max) = config.z_bounds(expiry);
        let grid = HamGrid::new(z_min, z_max, config.n_z, expiry, config.n_u)?;
        let q = config.quadrature;
        let build = |i: usize| {
            let (_, gamma) = lambda_gamma(model, i);
            Kernel::build(&grid, model.sigma()[i], gamma, config.greens_variant, q.time_nodes, q.robin_nodes)
        };
        let kernels = [build(0), build(1)];
        Ok(Self { model: model.clone(), expiry, config: *config, grid, kernels })
    }

    pub fn grid(&self) -> &HamGrid {
        &self.grid
    }

    pub fn config(&self) -> &HamConfig {
        &self.config
    }

    pub fn model(&self) -> &RegimeModel {
        &self.model
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    pub fn initial_guess(&self, mode: InitialGuess) -> Result<TermGrid> {
        initial_guess(&self.model, &self.grid, self.expiry, mode, &self.config)
    }

    /// Term 0 under the configured terminal mode and initial guess.
    pub fn term_zero(&self) -> Result<TermGrid> {
        match (self.config.terminal_mode, self.config.initial_guess) {
            (TerminalMode::LiteralZero, g) => self.initial_guess(g),
            (TerminalMode::Payoff, InitialGuess::EuropeanRs) => self.initial_guess(InitialGuess::EuropeanRs),
            (TerminalMode::Payoff, InitialGuess::Zero) => {
                // single-regime put in the same orientation, carrying the payoff
                let t = self.expiry;
                let values = [0, 1].map(|i| {
                    let (r, s) = (self.model.r()[i], self.model.sigma()[i]);
                    let mut v = Vec::with_capacity(self.grid.n_z() * self.grid.n_u());
                    for &u in &self.grid.u {
                        v.extend(self.grid.z.iter().map(|z| bs_put(t, (-z).exp(), r, 0.0, s, u) / t));
                    }
                    v
                });
                TermGrid::from_values(0, &self.grid, values)
            }
        }
    }

    /// Term 0 at `u = 0`.
    pub fn terminal_value(&self, z: f64) -> f64 {
        match (self.config.terminal_mode, self.config.initial_guess) {
            (TerminalMode::LiteralZero, InitialGuess::Zero) => 0.0,
            _ => ((-z).exp() / self.expiry - 1.0).max(0.0),
        }
    }

    /// Right-hand side `lambda_i (V_i - V_j) - (2 e^z / sigma_i^2) dV_i/dz` of `prev` at time node `n`.
    pub fn source_at_node(&self, prev: &TermGrid, regime: usize, n: usize) -> Vec<f64> {
        let (lambda, _) = lambda_gamma(&self.model, regime);
        let c = 2.0 / self.model.sigma()[regime].powi(2);
        let n_z = self.grid.n_z();
        let j = 1 - regime;
        (0..n_z)
            .map(|k| {
                let idx = n * n_z + k;
                lambda * (prev.values[regime][idx] - prev.values[j][idx])
                    - c * self.grid.z[k].exp() * prev.d_dz[regime][idx]
            })
            .collect()
    }

    /// Term `prev.m + 1`.
    pub fn step(&self, prev: &TermGrid) -> Result<TermGrid> {
        Ok(self.step_with_notes(prev)?.0)
    }

    fn step_with_notes(&self, prev: &TermGrid) -> Result<(TermGrid, Vec<String>)> {
        if prev.n_z() != self.grid.n_z() || prev.values[0].len() != self.grid.n_z() * self.grid.n_u() {
            return Err(PricingError::GridMismatch("previous term is not on the solver grid".into()));
        }
        let m = prev.m + 1;
        if prev.is_identically_zero() {
            return Ok((TermGrid::zeros(m, &self.grid), Vec::new()));
        }
        let mut notes = Vec::new();
        let n_z = self.grid.n_z();
        let n_u = self.grid.n_u();
        let origin = self.grid.origin;
        let xi = self.grid.xi();
        let du = self.grid.du();
        let mut values = [vec![0.0; n_z * n_u], vec![0.0; n_z * n_u]];
        for (i, out) in values.iter_mut().enumerate() {
            let j = 1 - i;
            let (lambda, _) = lambda_gamma(&self.model, i);
            let c = 2.0 / self.model.sigma()[i].powi(2);
            let kern = &self.kernels[i];
            let n_q = kern.n_q();
            let vi = TimeInterp::new(&self.grid.u, &prev.values[i], n_z);
            let vj = TimeInterp::new(&self.grid.u, &prev.values[j], n_z);
            let di = TimeInterp::new(&self.grid.u, &prev.d_dz[i], n_z);
            // sources[l * n_q + q] on the xi nodes
            let sources: Vec<Vec<f64>> = (0..(n_u - 1) * n_q)
                .into_par_iter()
                .map(|lq| {
                    let (l, q) = (lq / n_q, lq % n_q);
                    let x = self.grid.u[l] + kern.theta[q] * du;
                    (0..xi.len())
                        .map(|s| {
                            let k = origin + s;
                            lambda * (vi.at(l, x, k) - vj.at(l, x, k)) - c * xi[s].exp() * di.at(l, x, k)
                        })
                        .collect()
                })
                .collect();
            let peak = sources.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            let edge = sources.iter().fold(0.0f64, |a, v| a.max(v[v.len() - 1].abs()));
            if peak > 0.0 && edge > 1e-10 * peak {
                notes.push(format!(
                    "term {m} regime {i}: source at xi_max is {:.1e} of its peak; widen z_max",
                    edge / peak
                ));
            }
            let scale = 0.5 * self.model.sigma()[i].powi(2) * du;
            let rows: Vec<Vec<f64>> = (1..n_u)
                .into_par_iter()
                .map(|n| {
                    (0..n_z)
                        .map(|k| {
                            let mut acc = 0.0;
                            for l in 0..n {
                                for q in 0..n_q {
                                    acc += kern.weight[q] * kern.row(n - l, q, k).dot(&sources[l * n_q + q]);
                                }
                            }
                            scale * acc
                        })
                        .collect()
                })
                .collect();
            for (n, row) in rows.into_iter().enumerate() {
                out[(n + 1) * n_z..(n + 2) * n_z].copy_from_slice(&row);
            }
            if out.iter().any(|v| !v.is_finite()) {
                return Err(PricingError::QuadratureNotConverged { estimate: f64::INFINITY, tolerance: 0.0 });
            }
        }
        Ok((TermGrid::from_values(m, &self.grid, values)?, notes))
    }

    /// Terms `0..=m_trunc` plus any runtime notes.
    pub fn terms(&self, m_trunc: usize) -> Result<(Vec<TermGrid>, Vec<String>)> {
        let mut terms = vec![self.term_zero()?];
        let mut notes = Vec::new();
        for _ in 0..m_trunc {
            let (t, n) = self.step_with_notes(terms.last().unwrap())?;
            notes.extend(n);
            terms.push(t);
        }
        Ok((terms, notes))
    }
}

/// Term `prev.m + 1` with the operators held by `solver`.
pub fn ham_step(solver: &HamSolver, prev: &TermGrid) -> Result<TermGrid> {
    solver.step(prev)
}

/// Assembled reduced values on the solver grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSurfaces {
    pub values: [Vec<f64>; 2],
    /// `max_i ||V_i^m|| * weight(m)` over `z >= 0`, one entry per term.
    pub term_norms: Vec<f64>,
    n_z: usize,
}

pub fn assemble_series(terms: &[TermGrid], grid: &HamGrid, normalization: SeriesNormalization) -> Result<SeriesSurfaces> {
    let len = grid.n_z() * grid.n_u();
    let mut values = [vec![0.0; len], vec![0.0; len]];
    let mut term_norms = Vec::with_capacity(terms.len());
    for t in terms {
        if t.n_z() != grid.n_z() || t.values.iter().any(|v| v.len() != len) {
            return Err(PricingError::GridMismatch(format!("term {} is not on the series grid", t.m)));
        }
        let w = normalization.weight(t.m);
        for i in 0..2 {
            for (a, v) in values[i].iter_mut().zip(&t.values[i]) {
                *a += w * v;
            }
        }
        term_norms.push(w * t.half_line_norm(grid, 0).max(t.half_line_norm(grid, 1)));
    }
    Ok(SeriesSurfaces { values, term_norms, n_z: grid.n_z() })
}

impl SeriesSurfaces {
    pub fn at(&self, regime: usize, n: usize, k: usize) -> f64 {
        self.values[regime][n * self.n_z + k]
    }

    /// Value at `(u, z)` by monotone cubics in `z` then `u`.
    pub fn value_at(&self, grid: &HamGrid, regime: usize, u: f64, z: f64) -> Result<f64> {
        surface_value(&self.values[regime], grid, u, z)
    }
}

fn surface_value(values: &[f64], grid: &HamGrid, u: f64, z: f64) -> Result<f64> {
    let n_z = grid.n_z();
    let (z_lo, z_hi) = (grid.z[0], grid.z_max());
    if !(z >= z_lo - 1e-12 && z <= z_hi + 1e-12) {
        return Err(PricingError::ExtrapolationRefused(format!("z = {z} outside [{z_lo}, {z_hi}]")));
    }
    let z = z.clamp(z_lo, z_hi);
    let along_z: Vec<f64> = (0..grid.n_u())
        .map(|n| Pchip::new(grid.z.clone(), values[n * n_z..(n + 1) * n_z].to_vec())?.eval(z))
        .collect::<Result<_>>()?;
    Pchip::new(grid.u.clone(), along_z)?.eval(u)
}

/// `z = -ln y`, with `y = 0` mapped to the far edge of the grid.
pub fn reduced_z(y: f64, grid: &HamGrid) -> Result<f64> {
    if y == 0.0 {
        return Ok(grid.z_max());
    }
    if !(y > 0.0 && y.is_finite()) {
        return Err(PricingError::Domain(format!("ratio {y} must be >= 0")));
    }
    Ok(-y.ln())
}

fn check_contract(spec: &AsianOptionSpec, state: &MarketState, model: &RegimeModel) -> Result<()> {
    spec.validate()?;
    state.validate(spec, model)?;
    if spec.style != OptionStyle::FloatingPut {
        return Err(PricingError::NotApplicable(format!("series pricer handles floating_put, not {}", spec.style.name())));
    }
    if spec.multiplier != 1.0 {
        return Err(PricingError::NotApplicable("series pricer handles multiplier 1 only".into()));
    }
    Ok(())
}

/// `EuropeanRs` -> `european_rs`, matching the serde names.
fn snake(v: impl std::fmt::Debug) -> String {
    let mut out = String::new();
    for (i, ch) in format!("{v:?}").chars().enumerate() {
        if ch.is_ascii_uppercase() && i > 0 {
            out.push('_');
        }
        out.push(ch.to_ascii_lowercase());
    }
    out
}

/// Price from precomputed terms, with partial sums as diagnostics.
pub fn price_from_terms(
    solver: &HamSolver,
    terms: &[TermGrid],
    spec: &AsianOptionSpec,
    state: &MarketState,
) -> Result<PriceResult> {
    check_contract(spec, state, &solver.model)?;
    if (spec.expiry - solver.expiry).abs() > 1e-12 {
        return Err(PricingError::GridMismatch("contract expiry differs from the solver's".into()));
    }
    let grid = &solver.grid;
    let u = (spec.expiry - state.t).max(0.0);
    let z = reduced_z(state.ratio(), grid)?;
    let series = assemble_series(terms, grid, solver.config.normalization)?;
    let mut partial = Vec::with_capacity(terms.len());
    let mut acc = 0.0;
    for t in terms {
        let w = solver.config.normalization.weight(t.m);
        let v = if u == 0.0 {
            // exact at expiry: later terms vanish and term 0 is the terminal shape
            if t.m == 0 {
                solver.terminal_value(z)
            } else {
                0.0
            }
        } else {
            surface_value(&t.values[state.regime], grid, u, z)?
        };
        acc += w * v;
        partial.push(state.spot * acc);
    }
    let price = if u == 0.0 { state.spot * acc } else { state.spot * series.value_at(grid, state.regime, u, z)? };
    let last_delta = match partial.len() {
        0 | 1 => 0.0,
        n => (partial[n - 1] - partial[n - 2]).abs(),
    };
    let c = &solver.config;
    let mut notes = vec![format!(
        "terminal_mode={} initial_guess={} normalization={} greens_variant={}",
        snake(c.terminal_mode),
        snake(c.initial_guess),
        snake(c.normalization),
        snake(c.greens_variant)
    )];
    if state.ratio() == 0.0 {
        notes.push(format!("y = 0 evaluated at z_max = {:.4}", grid.z_max()));
    }
    Ok(PriceResult {
        price,
        method: Method::Ham,
        error_estimate: last_delta,
        diagnostics: Diagnostics { term_norms: series.term_norms, partial_prices: partial, notes, ..Default::default() },
    })
}

pub fn price_floating_put_ham(
    spec: &AsianOptionSpec,
    state: &MarketState,
    model: &RegimeModel,
    config: &HamConfig,
) -> Result<PriceResult> {
    check_contract(spec, state, model)?;
    let solver = HamSolver::new(model, spec.expiry, config)?;
    let (terms, notes) = solver.terms(config.m_trunc)?;
    let mut res = price_from_terms(&solver, &terms, spec, state)?;
    res.diagnostics.notes.extend(notes);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> RegimeModel {
        RegimeModel::two_state([0.05, 0.03], [0.2, 0.3], 1.0, 2.0).unwrap()
    }

    fn small() -> HamConfig {
        HamConfig { n_z: 161, n_u: 21, m_trunc: 2, ..Default::default() }
    }

    #[test]
    fn factorial_weights() {
        assert_eq!(SeriesNormalization::Factorial.weight(0), 1.0);
        assert_eq!(SeriesNormalization::Factorial.weight(4), 1.0 / 24.0);
        assert_eq!(SeriesNormalization::Unit.weight(4), 1.0);
    }

    #[test]
    fn zero_previous_term_gives_zero() {
        let s = HamSolver::new(&desk(), 1.0, &small()).unwrap();
        let z = TermGrid::zeros(3, s.grid());
        let next = s.step(&z).unwrap();
        assert_eq!(next.m, 4);
        assert!(next.is_identically_zero());
    }

    #[test]
    fn european_guess_vanishes_at_far_edge() {
        let s = HamSolver::new(&desk(), 1.0, &small()).unwrap();
        let g = s.initial_guess(InitialGuess::EuropeanRs).unwrap();
        let last = s.grid().n_z() - 1;
        for n in 0..s.grid().n_u() {
            assert!(g.at(0, n, last).abs() < 1e-8 && g.at(1, n, last).abs() < 1e-8);
        }
    }

    #[test]
    fn new_terms_start_from_zero() {
        let s = HamSolver::new(&desk(), 1.0, &small()).unwrap();
        let t0 = s.term_zero().unwrap();
        let t1 = s.step(&t0).unwrap();
        assert!(t1.row(0, 0).iter().chain(t1.row(1, 0)).all(|&v| v == 0.0));
        assert!(!t1.is_identically_zero());
    }

    #[test]
    fn rejects_dividends_and_other_styles() {
        let m = desk().with_dividends(vec![0.01, 0.0]).unwrap();
        assert!(matches!(HamSolver::new(&m, 1.0, &small()), Err(PricingError::NotApplicable(_))));
        let mut spec = AsianOptionSpec::floating_put(1.0);
        spec.style = OptionStyle::FloatingCall;
        let st = MarketState::at_inception(100.0, 0);
        assert!(price_floating_put_ham(&spec, &st, &desk(), &small()).is_err());
    }
}
