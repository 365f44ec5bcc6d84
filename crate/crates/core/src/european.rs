//! Closed-form European put under a two-state regime-switching GBM.
//!
//! The price is `K e^{-r_i s}` plus a one-dimensional integral over `rho`
//! obtained by inverting a Fourier transform along the ray `k = rho e^{i pi/4}`.
//! Along that ray the transform of the (symmetrised) put is written with the
//! polar pair `(M, theta)` of the square root of
//! `(1/4 + alpha + i rho^2)^2 + c` and the phases `X_i`, `Y_i`, `f1`, `f2`.
//!
//! The representation is exact when both regimes share the short rate. With
//! distinct rates the regime's own rate is used in the shift and the result
//! is an approximation.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::model::RegimeModel;
use crate::numerics::gauss::GaussLegendre;
use crate::numerics::special::bs_put;

/// Below this `|sigma1^2 - sigma2^2|` the closed form is not evaluated.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadRule {
    /// Fixed Gauss–Legendre panels on `[0, rho_max]`.
    GaussLegendrePanels,
    /// Panels sized to the local oscillation and decay, walked until the
    /// asymptotic tail estimate falls below tolerance.
    Adaptive,
}

/// Quadrature controls for the improper `rho` integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub rho_max: f64,
    pub n_rho: usize,
    pub rule: QuadRule,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rho_max: 50.0, n_rho: 2000, rule: QuadRule::GaussLegendrePanels, abs_tol: 1e-8, rel_tol: 1e-6 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PricingError::InvalidConfig(m.to_string()));
        if !(self.rho_max.is_finite() && self.rho_max > 0.0) {
            return bad("quadrature rho_max must be > 0");
        }
        if self.n_rho < 16 {
            return bad("quadrature n_rho must be >= 16");
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return bad("quadrature tolerances must be > 0");
        }
        Ok(())
    }

    fn tolerance(&self, price: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * price.abs())
    }
}

/// How the generator coupling enters the radical for `M` and `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuConvention {
    /// `c = 4 mu^2 = 16 a12 a21 / (sigma1^2 - sigma2^2)^2`; this is what
    /// the eigenvalues of the transformed two-state system require.
    #[default]
    Corrected,
    /// `c = mu^2 = 4 a12 a21 / (sigma1^2 - sigma2^2)^2`, as typeset.
    Printed,
}

impl MuConvention {
    pub fn coupling(self, mu_sq: f64) -> f64 {
        match self {
            MuConvention::Corrected => 4.0 * mu_sq,
            MuConvention::Printed => mu_sq,
        }
    }
}

/// Time-dependent scalars of the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceScalars {
    /// `(sigma1^2 - sigma2^2)(T - t) / 4`
    pub tau_bar: f64,
    /// `2 (a12 - a21) / (sigma1^2 - sigma2^2)`
    pub alpha: f64,
    /// `4 a12 a21 / (sigma1^2 - sigma2^2)^2`
    pub mu_sq: f64,
}

pub fn slice_scalars(model: &RegimeModel, t: f64, expiry: f64) -> Result<SliceScalars> {
    model.require_two_states()?;
    let s1 = model.sigma()[0].powi(2);
    let s2 = model.sigma()[1].powi(2);
    let gap = s1 - s2;
    if gap.abs() < DEGENERACY_THRESHOLD {
        return Err(PricingError::DegenerateVolatilities { gap: gap.abs() });
    }
    let a12 = model.generator()[0][1];
    let a21 = model.generator()[1][0];
    Ok(SliceScalars {
        tau_bar: gap * (expiry - t) / 4.0,
        alpha: 2.0 * (a12 - a21) / gap,
        mu_sq: 4.0 * a12 * a21 / (gap * gap),
    })
}

/// `(M(rho), theta(rho))`: modulus to the power 1/2 and half-argument of
/// `(1/4 + alpha + i rho^2)^2 + mu_sq`.
///
/// `theta` uses the two-argument arctangent. The integrand only sees the
/// root through even functions of it, so no unwrapping is needed.
pub fn m_theta(rho: f64, alpha: f64, mu_sq: f64) -> (f64, f64) {
    let b = 0.25 + alpha;
    let r2 = rho * rho;
    let re = b * b - r2 * r2 + mu_sq;
    let im = 2.0 * r2 * b;
    let m = re.hypot(im).sqrt();
    (m, 0.5 * im.atan2(re))
}

/// Per-price constants of the `rho` integrand.
#[derive(Debug, Clone, Copy)]
struct Integrand {
    tau_bar: f64,
    alpha: f64,
    coupling: f64,
    /// `|ln(S/K) + r_i (T - t)|`
    x: f64,
    /// `(sigma1^2 + sigma2^2)(T - t) / 4`
    kappa: f64,
    /// `(-1)^{i-1}`
    sign: f64,
    /// `(a12 + a21) / (sigma1^2 - sigma2^2)`
    group1: f64,
    theta_shift: f64,
}

impl Integrand {
    #[inline]
    fn eval(&self, rho: f64) -> f64 {
        let (m, theta0) = m_theta(rho, self.alpha, self.coupling);
        let theta = theta0 + self.theta_shift;
        if m < 1e-300 {
            return 0.0;
        }
        let big_x = self.sign * m * self.tau_bar * theta.cos();
        let big_y = self.sign * m * self.tau_bar * theta.sin();
        let r2 = rho * rho;
        let f1 = (-rho * self.x * FRAC_1_SQRT_2).exp();
        let f2 = self.kappa * r2 - rho * self.x * FRAC_1_SQRT_2;
        let a = 2.0 * r2 - 0.5;
        let b = 2.0 * r2 + 0.5;
        let den = r2 * r2 + 1.0 / 16.0;
        let ex = big_x.exp();
        let emx = (-big_x).exp();

        let p = f2 + theta - big_y;
        let q = f2 + theta + big_y;
        let (sp, cp) = p.sin_cos();
        let (sq, cq) = q.sin_cos();
        let g1 = self.sign * 2.0 * f1 * self.group1 / (m * den)
            * (ex * (a * sp - b * cp) - emx * (a * sq - b * cq));
        let g2 = 2.0 * f1 / m * (ex * (sp + cp) - emx * (sq + cq));
        let (s3, c3) = (f2 - big_y).sin_cos();
        let (s4, c4) = (f2 + big_y).sin_cos();
        let g3 = f1 / den * (ex * (a * s3 - b * c3) + emx * (a * s4 - b * c4));
        g1 + g2 + g3
    }

    /// Magnitude envelope of the integrand, used for tail estimates.
    fn envelope(&self, rho: f64) -> f64 {
        let (m, theta) = m_theta(rho, self.alpha, self.coupling);
        let big_x = (m * self.tau_bar * theta.cos()).abs();
        let r2 = rho * rho;
        let f1 = (-rho * self.x * FRAC_1_SQRT_2).exp();
        let den = r2 * r2 + 1.0 / 16.0;
        let hyp = (2.0 * r2 - 0.5).hypot(2.0 * r2 + 0.5);
        let e = 2.0 * big_x.exp();
        f1 * e * (2.0 * self.group1.abs() * hyp / (m.max(1e-300) * den) + 2.0 * SQRT_2 / m.max(1e-300) + hyp / den)
    }

    /// Fastest local angular frequency of the integrand's oscillation.
    fn phase_rate(&self, rho: f64) -> f64 {
        2.0 * (self.kappa + self.tau_bar.abs()) * rho + self.x * FRAC_1_SQRT_2
    }

    /// Slowest oscillation frequency; it controls the tail.
    fn slow_phase_rate(&self, rho: f64) -> f64 {
        2.0 * (self.kappa - self.tau_bar.abs()).abs() * rho
    }

    /// Rate at which the envelope decays (per unit rho).
    fn decay_rate(&self, rho: f64) -> f64 {
        self.x * FRAC_1_SQRT_2 + 2.0 / rho.max(1.0)
    }

    fn tail_estimate(&self, rho: f64) -> f64 {
        self.envelope(rho) / self.slow_phase_rate(rho).max(self.decay_rate(rho))
    }
}

/// Closed-form price with its quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuropeanRsPrice {
    pub price: f64,
    pub error_estimate: f64,
    pub rule_used: QuadRule,
    pub evaluations: usize,
}

/// Options for [`price_european_put_rs_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EuropeanRsOptions {
    pub mu_convention: MuConvention,
    /// Adds this angle to `theta`; the price must not depend on it when it is
    /// a multiple of `pi`.
    pub theta_shift: f64,
}

/// Regime-switching European put via the closed form, regime index `regime` in `{0, 1}`.
#[allow(clippy::too_many_arguments)]
pub fn price_european_put_rs(
    model: &RegimeModel,
    spot: f64,
    strike: f64,
    t: f64,
    expiry: f64,
    regime: usize,
    quad: &QuadratureSpec,
) -> Result<EuropeanRsPrice> {
    price_european_put_rs_with(model, spot, strike, t, expiry, regime, quad, EuropeanRsOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn price_european_put_rs_with(
    model: &RegimeModel,
    spot: f64,
    strike: f64,
    t: f64,
    expiry: f64,
    regime: usize,
    quad: &QuadratureSpec,
    opts: EuropeanRsOptions,
) -> Result<EuropeanRsPrice> {
    quad.validate()?;
    if regime > 1 {
        return Err(PricingError::InvalidState(format!("regime {regime} not in {{0, 1}}")));
    }
    if !(spot > 0.0 && strike > 0.0) {
        return Err(PricingError::Domain("spot and strike must be > 0".into()));
    }
    if !(t < expiry) {
        return Err(PricingError::Domain(format!("t = {t} must be < expiry {expiry}")));
    }
    let sc = slice_scalars(model, t, expiry)?;
    let s = expiry - t;
    let r_i = model.r()[regime];
    let s1 = model.sigma()[0].powi(2);
    let s2 = model.sigma()[1].powi(2);
    let a12 = model.generator()[0][1];
    let a21 = model.generator()[1][0];
    let f = Integrand {
        tau_bar: sc.tau_bar,
        alpha: sc.alpha,
        coupling: opts.mu_convention.coupling(sc.mu_sq),
        x: ((spot / strike).ln() + r_i * s).abs(),
        kappa: (s1 + s2) * s / 4.0,
        sign: if regime == 0 { 1.0 } else { -1.0 },
        group1: (a12 + a21) / (s1 - s2),
        theta_shift: opts.theta_shift,
    };
    let discount_strike = strike * (-r_i * s).exp();
    let prefactor = (spot * strike).sqrt() / (4.0 * PI * SQRT_2)
        * (-0.5 * (r_i + a21 + a12 + (s1 + s2) / 8.0) * s).exp();

    let tol = quad.tolerance(discount_strike);
    let panels = integrate_panels(&f, quad);
    let mut est = prefactor * panels.error;
    let mut integral = panels.value;
    let mut rule = QuadRule::GaussLegendrePanels;
    let mut evals = panels.evaluations;
    if quad.rule == QuadRule::Adaptive || est > tol {
        let int_tol = tol / prefactor.max(1e-300);
        let ad = integrate_adaptive(&f, int_tol, quad.n_rho);
        evals += ad.evaluations;
        integral = ad.value;
        est = prefactor * ad.error;
        rule = QuadRule::Adaptive;
    }
    let price = discount_strike + prefactor * integral;
    if !(est <= quad.tolerance(price).max(tol)) {
        return Err(PricingError::QuadratureNotConverged { estimate: est, tolerance: tol });
    }
    Ok(EuropeanRsPrice { price, error_estimate: est, rule_used: rule, evaluations: evals })
}

struct Quadrature {
    value: f64,
    error: f64,
    evaluations: usize,
}

const PANEL_NODES: usize = 10;

fn integrate_panels(f: &Integrand, quad: &QuadratureSpec) -> Quadrature {
    let gl = GaussLegendre::new(PANEL_NODES);
    let n_panels = (quad.n_rho / PANEL_NODES).max(2);
    let n_panels = n_panels + n_panels % 2;
    let w = quad.rho_max / n_panels as f64;
    let mut fine = 0.0;
    let mut coarse = 0.0;
    for k in 0..n_panels {
        let a = k as f64 * w;
        fine += gl.integrate(a, a + w, |r| f.eval(r));
    }
    for k in 0..n_panels / 2 {
        let a = 2.0 * k as f64 * w;
        coarse += gl.integrate(a, a + 2.0 * w, |r| f.eval(r));
    }
    let tail = f.tail_estimate(quad.rho_max);
    Quadrature {
        value: fine,
        error: (fine - coarse).abs() + tail,
        evaluations: PANEL_NODES * (n_panels + n_panels / 2),
    }
}

const ADAPTIVE_RHO_CAP: f64 = 1.0e5;

fn integrate_adaptive(f: &Integrand, tol: f64, min_nodes: usize) -> Quadrature {
    let gl = GaussLegendre::new(16);
    let mut a = 0.0;
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    let budget = 2_000_000usize.max(min_nodes * 4);
    loop {
        let rate = f.phase_rate(a).max(f.decay_rate(a));
        // one oscillation period or decay length per panel
        let w = (2.0 * PI / rate).clamp(1e-3, 1.0);
        let b = a + w;
        let whole = gl.integrate(a, b, |r| f.eval(r));
        let (v, e, n) = refine(f, &gl, a, b, whole, 0.1 * tol * w, 0);
        total += v;
        err += e;
        evals += 16 + n;
        a = b;
        let tail = f.tail_estimate(a);
        if (tail < 0.5 * tol && a > 1.0) || a > ADAPTIVE_RHO_CAP || evals > budget {
            err += tail;
            break;
        }
    }
    Quadrature { value: total, error: err, evaluations: evals }
}

fn refine(f: &Integrand, gl: &GaussLegendre, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> (f64, f64, usize) {
    let m = 0.5 * (a + b);
    let l = gl.integrate(a, m, |r| f.eval(r));
    let r = gl.integrate(m, b, |r| f.eval(r));
    let d = (l + r - whole).abs();
    if d <= tol || depth >= 10 {
        return (l + r, d, 32);
    }
    let (vl, el, nl) = refine(f, gl, a, m, l, 0.5 * tol, depth + 1);
    let (vr, er, nr) = refine(f, gl, m, b, r, 0.5 * tol, depth + 1);
    (vl + vr, el + er, 32 + nl + nr)
}

/// European put with fall-backs when the closed form does not apply:
/// equal volatilities and equal rates give Black–Scholes, equal volatilities
/// with distinct rates use the finite-difference solver.
#[allow(clippy::too_many_arguments)]
pub fn price_european_put(
    model: &RegimeModel,
    spot: f64,
    strike: f64,
    t: f64,
    expiry: f64,
    regime: usize,
    quad: &QuadratureSpec,
) -> Result<(f64, &'static str)> {
    match price_european_put_rs(model, spot, strike, t, expiry, regime, quad) {
        Ok(p) => Ok((p.price, "european_rs")),
        Err(PricingError::DegenerateVolatilities { .. }) => {
            let r = model.r();
            if (r[0] - r[1]).abs() < 1e-14 {
                Ok((bs_put(spot, strike, r[0], 0.0, model.sigma()[0], expiry - t), "black_scholes"))
            } else {
                let cfg = crate::oracles::fd_european::EuropeanFdConfig::default();
                let p = crate::oracles::fd_european::price_european_put_fd(
                    model, spot, strike, expiry - t, regime, &cfg,
                )?;
                Ok((p, "fd"))
            }
        }
        Err(e) => Err(e),
    }
}

/// The closed form for many `(spot, strike)` pairs at one regime and one
/// time to maturity.
///
/// Along the ray the transform is evaluated in complex form. Its
/// single-regime limit `e^{-|a_ii| s} W_BS(sigma_i)` is subtracted and added
/// back through the Black–Scholes formula. The same integral results, but
/// the remaining integrand decays like `rho^-4` rather than `rho^-2`, which
/// matters at short maturities.
#[derive(Debug, Clone)]
pub struct EuropeanSlice {
    r: f64,
    sigma: f64,
    s: f64,
    survival: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    coef: Vec<Complex64>,
}

impl EuropeanSlice {
    pub fn new(model: &RegimeModel, regime: usize, s: f64, rho_max: f64, convention: MuConvention) -> Result<Self> {
        let sc = slice_scalars(model, 0.0, s)?;
        if !(s > 0.0) {
            return Err(PricingError::Domain(format!("time to maturity {s} must be > 0")));
        }
        let s1 = model.sigma()[0].powi(2);
        let s2 = model.sigma()[1].powi(2);
        let a12 = model.generator()[0][1];
        let a21 = model.generator()[1][0];
        let c = (s1 - s2) / 4.0;
        let coupling = convention.coupling(sc.mu_sq);
        let sig_i = model.sigma()[regime];
        let exit = model.exit_rate(regime);
        let omega = Complex64::from_polar(1.0, PI / 4.0);
        let gl = GaussLegendre::new(16);
        let rate = |rho: f64| (s1.max(s2) * s * rho).max(2.0 / rho.max(1.0));
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut coef = Vec::new();
        let mut a = 0.0;
        while a < rho_max {
            let b = (a + (2.0 * PI / rate(a)).min(0.25)).min(rho_max);
            for (rho, w) in gl.mapped(a, b) {
                let k2 = Complex64::new(0.0, rho * rho);
                let kq = k2 + 0.25;
                let shifted = kq + sc.alpha;
                let z = (shifted * shifted + coupling).sqrt();
                let m = -(s1 + s2) * kq / 4.0 - (a12 + a21) / 2.0;
                let d = -c * shifted;
                let row = if regime == 0 { d + a12 } else { a21 - d };
                let sd = z * (c * s);
                let w_rs = -(m * s).exp() / kq * (sd.cosh() + sd.sinh() / (z * c) * row);
                let w_bs = -(-0.5 * sig_i * sig_i * kq * s).exp() / kq * (-exit * s).exp();
                nodes.push(rho);
                weights.push(w);
                coef.push(omega * (w_rs - w_bs));
            }
            a = b;
        }
        Ok(Self { r: model.r()[regime], sigma: sig_i, s, survival: (-exit * s).exp(), nodes, weights, coef })
    }

    pub fn put(&self, spot: f64, strike: f64) -> f64 {
        let x = ((spot / strike).ln() + self.r * self.s).abs();
        let scale = (spot * strike).sqrt() * (-0.5 * self.r * self.s).exp();
        let disc_k = strike * (-self.r * self.s).exp();
        let w_bs = (bs_put(spot, strike, self.r, 0.0, self.sigma, self.s) - disc_k) / scale;
        let xr = x * FRAC_1_SQRT_2;
        let mut acc = 0.0;
        for ((&rho, &w), c) in self.nodes.iter().zip(&self.weights).zip(&self.coef) {
            let decay = (-rho * xr).exp();
            if decay < 1e-18 {
                break;
            }
            let (sn, cs) = (rho * xr).sin_cos();
            acc += w * decay * (c.re * cs - c.im * sn);
        }
        disc_k + scale * (self.survival * w_bs + acc / PI)
    }
}
