//! Crank–Nicolson solver for the reduced coupled system in `y = A / S`:
//!
//! `V_u = (1 - (r_i - q_i) y) V_y + sigma_i^2 y^2 V_yy / 2 - q_i V_i + sum_j a_ij V_j`,
//!
//! marched in time to maturity `u = T - t` from the payoff `(m y / T - 1)^+`
//! (put) or `(1 - m y / T)^+` (call). At `y = 0` the diffusion vanishes and
//! the drift points into the domain, so by default the equation itself is
//! imposed there with a one-sided derivative. The far field uses `V_yy = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::model::{AsianOptionSpec, MarketState, OptionStyle, RegimeModel};
use crate::numerics::banded::BandedMatrix;
use crate::numerics::dense::{expm, Matrix};
use crate::numerics::interp::Pchip;
use crate::result::{Diagnostics, Method, PriceResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// One banded solve for all regimes per step.
    #[default]
    Implicit,
    /// Half-step generator exponential around decoupled CN steps.
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryAtZero {
    /// Degenerate equation `V_u = V_y - q V + coupling` at `y = 0`.
    #[default]
    Pde,
    /// `V(t, 0) = 0`.
    DirichletZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdConfig {
    /// Upper grid bound; `None` uses `max(4T, 4 y0 + 4T)`.
    #[serde(default)]
    pub y_max: Option<f64>,
    pub n_y: usize,
    pub n_t: usize,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub boundary_at_zero: BoundaryAtZero,
    /// Implicit Euler half-steps before Crank–Nicolson.
    #[serde(default = "default_rannacher")]
    pub rannacher_half_steps: usize,
    /// Number of stored time levels, including `u = 0` and the last.
    #[serde(default = "default_levels")]
    pub retained_levels: usize,
}

fn default_rannacher() -> usize {
    4
}

fn default_levels() -> usize {
    11
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            y_max: None,
            n_y: 800,
            n_t: 800,
            scheme: Scheme::CrankNicolson,
            coupling: Coupling::Implicit,
            boundary_at_zero: BoundaryAtZero::Pde,
            rannacher_half_steps: default_rannacher(),
            retained_levels: default_levels(),
        }
    }
}

impl FdConfig {
    pub fn validate(&self, expiry: f64) -> Result<()> {
        let bad = |m: String| Err(PricingError::InvalidConfig(m));
        if self.n_y < 3 || self.n_t < 3 {
            return bad("fd n_y and n_t must be >= 3".into());
        }
        if let Some(y) = self.y_max {
            if !(y > expiry) {
                return bad(format!("fd y_max {y} must exceed expiry {expiry}"));
            }
        }
        if self.rannacher_half_steps % 2 != 0 || self.rannacher_half_steps / 2 >= self.n_t {
            return bad("fd rannacher_half_steps must be even and below 2 n_t".into());
        }
        if self.retained_levels < 2 {
            return bad("fd retained_levels must be >= 2".into());
        }
        Ok(())
    }

    pub fn default_y_max(expiry: f64, y0: f64) -> f64 {
        (4.0 * expiry).max(4.0 * y0 + 4.0 * expiry)
    }

    fn scaled(&self, k: usize) -> Self {
        Self { n_y: self.n_y * k, n_t: self.n_t * k, ..*self }
    }
}

/// Solution surfaces `V_i(u, y)` on the grid at the retained levels.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSurfaces {
    pub y: Vec<f64>,
    /// Time to maturity of each retained level.
    pub u: Vec<f64>,
    /// `values[level][regime][node]`
    pub values: Vec<Vec<Vec<f64>>>,
}

impl FdSurfaces {
    pub fn last(&self) -> &[Vec<f64>] {
        self.values.last().expect("at least two levels")
    }

    /// Monotone cubic interpolation in `y` at a stored level.
    pub fn value_at(&self, level: usize, regime: usize, y: f64) -> Result<f64> {
        let ymax = *self.y.last().unwrap();
        if y > ymax {
            return Err(PricingError::ExtrapolationRefused(format!("y = {y} above grid bound {ymax}")));
        }
        Pchip::new(self.y.clone(), self.values[level][regime].clone())?.eval(y)
    }

    /// True if every stored level is nondecreasing in `y` up to `tol`.
    pub fn nondecreasing_in_y(&self, tol: f64) -> bool {
        self.values.iter().all(|lvl| lvl.iter().all(|v| v.windows(2).all(|w| w[1] >= w[0] - tol)))
    }
}

/// Terminal shape of the reduced problem for a floating contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedPayoff {
    pub put: bool,
    pub multiplier: f64,
}

impl ReducedPayoff {
    pub fn from_spec(spec: &AsianOptionSpec) -> Result<Self> {
        match spec.style {
            OptionStyle::FloatingPut => Ok(Self { put: true, multiplier: spec.multiplier }),
            OptionStyle::FloatingCall => Ok(Self { put: false, multiplier: spec.multiplier }),
            s => Err(PricingError::NotApplicable(format!("reduced solver prices floating styles, not {}", s.name()))),
        }
    }

    fn eval(&self, y: f64, expiry: f64) -> f64 {
        let x = self.multiplier * y / expiry - 1.0;
        if self.put {
            x.max(0.0)
        } else {
            (-x).max(0.0)
        }
    }
}

/// Floating-put surfaces from maturity back to `t = 0`.
pub fn fd_price(model: &RegimeModel, expiry: f64, cfg: &FdConfig) -> Result<FdSurfaces> {
    fd_surfaces(model, expiry, expiry, ReducedPayoff { put: true, multiplier: 1.0 }, cfg)
}

/// Surfaces up to time to maturity `horizon`.
pub fn fd_surfaces(
    model: &RegimeModel,
    expiry: f64,
    horizon: f64,
    pay: ReducedPayoff,
    cfg: &FdConfig,
) -> Result<FdSurfaces> {
    cfg.validate(expiry)?;
    if !(horizon > 0.0 && horizon <= expiry) {
        return Err(PricingError::Domain(format!("horizon {horizon} outside (0, {expiry}]")));
    }
    let y_max = cfg.y_max.unwrap_or(FdConfig::default_y_max(expiry, 0.0));
    let y = kinked_grid(y_max, cfg.n_y, expiry / pay.multiplier);
    let ops = Operators::build(model, &y, cfg.boundary_at_zero);
    let n_states = model.n_states();
    let mut v: Vec<Vec<f64>> = (0..n_states).map(|_| y.iter().map(|&x| pay.eval(x, expiry)).collect()).collect();
    if cfg.boundary_at_zero == BoundaryAtZero::DirichletZero {
        v.iter_mut().for_each(|r| r[0] = 0.0);
    }

    let dt = horizon / cfg.n_t as f64;
    let keep = retained_steps(cfg.n_t, cfg.retained_levels);
    let mut out = FdSurfaces { y: y.clone(), u: vec![0.0], values: vec![v.clone()] };
    let mut stepper = match cfg.coupling {
        Coupling::Implicit => Stepper::implicit(&ops, model, dt)?,
        Coupling::Strang => Stepper::strang(&ops, model, dt)?,
    };
    let ran_steps = cfg.rannacher_half_steps / 2;
    for step in 1..=cfg.n_t {
        if step <= ran_steps {
            stepper.rannacher(&mut v)?;
        } else {
            stepper.crank_nicolson(&mut v);
        }
        if keep.contains(&step) {
            out.u.push(step as f64 * dt);
            out.values.push(v.clone());
        }
    }
    Ok(out)
}

fn retained_steps(n_t: usize, levels: usize) -> Vec<usize> {
    let k = levels - 1;
    let mut s: Vec<usize> = (1..=k).map(|i| (i * n_t).div_ceil(k)).collect();
    s.dedup();
    s
}

/// Uniform grid on `[0, ~y_max]` with the payoff kink on a node.
fn kinked_grid(y_max: f64, n_y: usize, kink: f64) -> Vec<f64> {
    let nk = ((n_y as f64 * kink / y_max).round() as usize).clamp(1, n_y - 1);
    let h = kink / nk as f64;
    (0..=n_y).map(|j| j as f64 * h).collect()
}

/// Per-regime spatial operators as sparse rows `(col offset, weight)`.
struct Operators {
    n: usize,
    rows: Vec<Vec<Vec<(isize, f64)>>>,
    dirichlet_zero: bool,
}

impl Operators {
    fn build(model: &RegimeModel, y: &[f64], bc: BoundaryAtZero) -> Self {
        let n = y.len();
        let h = y[1] - y[0];
        let rows = (0..model.n_states())
            .map(|i| {
                let rq = model.r()[i] - model.q()[i];
                let s2 = model.sigma()[i].powi(2);
                (0..n)
                    .map(|j| {
                        let b = 1.0 - rq * y[j];
                        let mut row: Vec<(isize, f64)> = Vec::with_capacity(4);
                        if j == 0 {
                            if bc == BoundaryAtZero::Pde {
                                row.extend([(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)]);
                            }
                        } else if j == n - 1 {
                            row.extend([(0, 1.5 * b / h), (-1, -2.0 * b / h), (-2, 0.5 * b / h)]);
                        } else {
                            let d = 0.5 * s2 * y[j] * y[j];
                            let dh = d / (h * h);
                            row.extend([(-1, dh), (0, -2.0 * dh), (1, dh)]);
                            if b > 0.0 && b * h > 2.0 * d && j + 2 < n {
                                row.extend([(0, -1.5 * b / h), (1, 2.0 * b / h), (2, -0.5 * b / h)]);
                            } else {
                                row.extend([(-1, -0.5 * b / h), (1, 0.5 * b / h)]);
                            }
                        }
                        row
                    })
                    .collect()
            })
            .collect();
        Self { n, rows, dirichlet_zero: bc == BoundaryAtZero::DirichletZero }
    }

    fn apply(&self, i: usize, v: &[f64], j: usize) -> f64 {
        self.rows[i][j].iter().map(|&(o, w)| w * v[(j as isize + o) as usize]).sum()
    }
}

enum Stepper<'a> {
    Implicit {
        ops: &'a Operators,
        gen: Matrix,
        q: Vec<f64>,
        dt: f64,
        cn: BandedMatrix,
        euler: BandedMatrix,
    },
    Strang {
        ops: &'a Operators,
        q: Vec<f64>,
        dt: f64,
        half: Matrix,
        quarter: Matrix,
        cn: Vec<BandedMatrix>,
        euler: Vec<BandedMatrix>,
    },
}

impl<'a> Stepper<'a> {
    fn implicit(ops: &'a Operators, model: &RegimeModel, dt: f64) -> Result<Self> {
        let gen = model.generator().to_vec();
        let q = model.q().to_vec();
        let cn = coupled_matrix(ops, &gen, &q, 0.5 * dt)?;
        let euler = coupled_matrix(ops, &gen, &q, 0.5 * dt)?;
        Ok(Stepper::Implicit { ops, gen, q, dt, cn, euler })
    }

    fn strang(ops: &'a Operators, model: &RegimeModel, dt: f64) -> Result<Self> {
        let gen = model.generator().to_vec();
        let q = model.q().to_vec();
        let mut cn = Vec::new();
        let mut euler = Vec::new();
        for i in 0..gen.len() {
            cn.push(single_matrix(ops, i, q[i], 0.5 * dt)?);
            euler.push(single_matrix(ops, i, q[i], 0.5 * dt)?);
        }
        Ok(Stepper::Strang { ops, q, dt, half: expm(&gen, 0.5 * dt), quarter: expm(&gen, 0.25 * dt), cn, euler })
    }

    /// Two implicit Euler half-steps.
    fn rannacher(&mut self, v: &mut [Vec<f64>]) -> Result<()> {
        match self {
            Stepper::Implicit { ops, euler, .. } => {
                for _ in 0..2 {
                    let mut b = interleave(v);
                    if ops.dirichlet_zero {
                        zero_boundary(&mut b, v.len());
                    }
                    euler.solve(&mut b);
                    deinterleave(&b, v);
                }
            }
            Stepper::Strang { ops, euler, quarter, .. } => {
                for _ in 0..2 {
                    mix(quarter, v);
                    for (i, vi) in v.iter_mut().enumerate() {
                        if ops.dirichlet_zero {
                            vi[0] = 0.0;
                        }
                        euler[i].solve(vi);
                    }
                    mix(quarter, v);
                }
            }
        }
        Ok(())
    }

    fn crank_nicolson(&mut self, v: &mut [Vec<f64>]) {
        match self {
            Stepper::Implicit { ops, gen, q, dt, cn, .. } => {
                let ns = v.len();
                let mut b = vec![0.0; ns * ops.n];
                for j in 0..ops.n {
                    for i in 0..ns {
                        let mut lv = ops.apply(i, &v[i], j) - q[i] * v[i][j];
                        for (k, vk) in v.iter().enumerate() {
                            lv += gen[i][k] * vk[j];
                        }
                        if ops.dirichlet_zero && j == 0 {
                            lv = 0.0;
                        }
                        b[j * ns + i] = v[i][j] + 0.5 * *dt * lv;
                    }
                }
                if ops.dirichlet_zero {
                    zero_boundary(&mut b, ns);
                }
                cn.solve(&mut b);
                deinterleave(&b, v);
            }
            Stepper::Strang { ops, q, dt, half, cn, .. } => {
                mix(half, v);
                for (i, vi) in v.iter_mut().enumerate() {
                    let mut b: Vec<f64> = (0..ops.n)
                        .map(|j| {
                            let lv = if ops.dirichlet_zero && j == 0 { 0.0 } else { ops.apply(i, vi, j) - q[i] * vi[j] };
                            vi[j] + 0.5 * *dt * lv
                        })
                        .collect();
                    if ops.dirichlet_zero {
                        b[0] = 0.0;
                    }
                    cn[i].solve(&mut b);
                    *vi = b;
                }
                mix(half, v);
            }
        }
    }
}

fn mix(p: &Matrix, v: &mut [Vec<f64>]) {
    let n = v[0].len();
    let ns = v.len();
    let mut tmp = vec![0.0; ns];
    for j in 0..n {
        for (i, t) in tmp.iter_mut().enumerate() {
            *t = (0..ns).map(|k| p[i][k] * v[k][j]).sum();
        }
        for i in 0..ns {
            v[i][j] = tmp[i];
        }
    }
}

fn zero_boundary(b: &mut [f64], ns: usize) {
    b[..ns].iter_mut().for_each(|x| *x = 0.0);
}

fn interleave(v: &[Vec<f64>]) -> Vec<f64> {
    let ns = v.len();
    let n = v[0].len();
    let mut b = vec![0.0; ns * n];
    for (i, vi) in v.iter().enumerate() {
        for j in 0..n {
            b[j * ns + i] = vi[j];
        }
    }
    b
}

fn deinterleave(b: &[f64], v: &mut [Vec<f64>]) {
    let ns = v.len();
    for (i, vi) in v.iter_mut().enumerate() {
        for (j, x) in vi.iter_mut().enumerate() {
            *x = b[j * ns + i];
        }
    }
}

/// `I - c (L - Q + G)` on the interleaved unknowns, factored.
fn coupled_matrix(ops: &Operators, gen: &Matrix, q: &[f64], c: f64) -> Result<BandedMatrix> {
    let ns = gen.len();
    let n = ops.n;
    let bw = 3 * ns - 1;
    let mut m = BandedMatrix::zeros(ns * n, bw, bw);
    for j in 0..n {
        for i in 0..ns {
            let row = j * ns + i;
            m.add(row, row, 1.0);
            if ops.dirichlet_zero && j == 0 {
                continue;
            }
            for &(o, w) in &ops.rows[i][j] {
                let col = (j as isize + o) as usize * ns + i;
                m.add(row, col, -c * w);
            }
            m.add(row, row, c * q[i]);
            for k in 0..ns {
                if gen[i][k] != 0.0 {
                    m.add(row, j * ns + k, -c * gen[i][k]);
                }
            }
        }
    }
    m.factor()?;
    Ok(m)
}

fn single_matrix(ops: &Operators, i: usize, q: f64, c: f64) -> Result<BandedMatrix> {
    let n = ops.n;
    let mut m = BandedMatrix::zeros(n, 2, 2);
    for j in 0..n {
        m.add(j, j, 1.0);
        if ops.dirichlet_zero && j == 0 {
            continue;
        }
        for &(o, w) in &ops.rows[i][j] {
            m.add(j, (j as isize + o) as usize, -c * w);
        }
        m.add(j, j, c * q);
    }
    m.factor()?;
    Ok(m)
}

/// Prices at three successively doubled grids and the observed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Richardson {
    pub prices: [f64; 3],
    pub order: f64,
    pub extrapolated: f64,
}

impl Richardson {
    pub fn from_prices(prices: [f64; 3]) -> Self {
        let d1 = prices[1] - prices[0];
        let d2 = prices[2] - prices[1];
        let order = (d1 / d2).abs().log2();
        let p = order.max(1.0);
        Self { prices, order, extrapolated: prices[2] + d2 / (2f64.powf(p) - 1.0) }
    }
}

/// Dollar price `s V_i(T - t, a / s)` of a floating contract at the configured
/// grid, with a Richardson study on the grids halved once and twice.
pub fn fd_price_state(
    spec: &AsianOptionSpec,
    state: &MarketState,
    model: &RegimeModel,
    cfg: &FdConfig,
) -> Result<PriceResult> {
    spec.validate()?;
    state.validate(spec, model)?;
    let pay = ReducedPayoff::from_spec(spec)?;
    let y0 = state.ratio();
    if state.t == spec.expiry {
        let v = pay.eval(y0, spec.expiry);
        return Ok(PriceResult { price: state.spot * v, method: Method::Fd, error_estimate: 0.0, diagnostics: Diagnostics::default() });
    }
    let mut cfg = *cfg;
    cfg.y_max.get_or_insert(FdConfig::default_y_max(spec.expiry, y0));
    let horizon = spec.expiry - state.t;
    let price_at = |c: &FdConfig| -> Result<f64> {
        let s = fd_surfaces(model, spec.expiry, horizon, pay, c)?;
        Ok(state.spot * s.value_at(s.values.len() - 1, state.regime, y0)?)
    };
    let fine = price_at(&cfg)?;
    let coarse_ok = cfg.n_y >= 12 && cfg.n_t >= 12 && cfg.n_y % 4 == 0 && cfg.n_t % 4 == 0;
    let mut diagnostics = Diagnostics::default();
    let mut err = f64::NAN;
    if coarse_ok {
        let quarter = price_at(&FdConfig { n_y: cfg.n_y / 4, n_t: cfg.n_t / 4, ..cfg })?;
        let half = price_at(&FdConfig { n_y: cfg.n_y / 2, n_t: cfg.n_t / 2, ..cfg })?;
        let rich = Richardson::from_prices([quarter, half, fine]);
        err = (rich.extrapolated - fine).abs();
        diagnostics.richardson_order = Some(rich.order);
    }
    Ok(PriceResult { price: fine, method: Method::Fd, error_estimate: err, diagnostics })
}

/// Richardson study at `cfg`, `2 cfg`, `4 cfg` for the floating put at `y`.
pub fn richardson_study(model: &RegimeModel, expiry: f64, cfg: &FdConfig, regime: usize, y: f64) -> Result<Richardson> {
    let mut p = [0.0; 3];
    for (k, slot) in p.iter_mut().enumerate() {
        let s = fd_price(model, expiry, &cfg.scaled(1 << k))?;
        *slot = s.value_at(s.values.len() - 1, regime, y)?;
    }
    Ok(Richardson::from_prices(p))
}
