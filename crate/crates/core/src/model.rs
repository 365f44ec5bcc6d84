//! Market model, contract descriptors, coordinate transforms and payoffs.
//!
//! The generator is stored with `gen[i][i] = -(exit rate of state i)`, so
//! every row sums to zero and, for two states, `a11 = -a12`, `a22 = -a21`.
//! Under that convention `lambda_i = 2 a_ii / sigma_i^2` is nonpositive.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

/// Unvalidated model parameters, as read from a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub r: Vec<f64>,
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub q: Vec<f64>,
    pub generator: Vec<Vec<f64>>,
}

/// A validated Markov-modulated GBM market: per-regime short rates,
/// volatilities, dividend yields and the chain generator.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeModel {
    r: Vec<f64>,
    sigma: Vec<f64>,
    q: Vec<f64>,
    generator: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RatePolicy {
    Positive,
    NonNegative,
}

const ROW_SUM_TOL: f64 = 1e-10;

/// Checks every model invariant and reports the first violation by name.
pub fn validate_model(raw: &ModelParams) -> Result<RegimeModel> {
    validate_with(raw, RatePolicy::Positive)
}

fn validate_with(raw: &ModelParams, policy: RatePolicy) -> Result<RegimeModel> {
    let n = raw.sigma.len();
    let bad = |msg: String| Err(PricingError::InvalidModel(msg));
    if n == 0 {
        return bad("model has no regimes".into());
    }
    if raw.r.len() != n {
        return bad(format!("r has {} entries, sigma has {n}", raw.r.len()));
    }
    let q = if raw.q.is_empty() {
        vec![0.0; n]
    } else if raw.q.len() == n {
        raw.q.clone()
    } else {
        return bad(format!("q has {} entries, sigma has {n}", raw.q.len()));
    };
    for (i, &s) in raw.sigma.iter().enumerate() {
        if !(s.is_finite() && s > 0.0) {
            return bad(format!("sigma[{i}] not > 0"));
        }
    }
    for (i, &r) in raw.r.iter().enumerate() {
        let ok = match policy {
            RatePolicy::Positive => r > 0.0,
            RatePolicy::NonNegative => r >= 0.0,
        };
        if !(r.is_finite() && ok) {
            let rel = if policy == RatePolicy::Positive { ">" } else { ">=" };
            return bad(format!("r[{i}] not {rel} 0"));
        }
    }
    for (i, &qi) in q.iter().enumerate() {
        if !qi.is_finite() {
            return bad(format!("q[{i}] not finite"));
        }
    }
    if raw.generator.len() != n {
        return bad(format!("generator has {} rows, expected {n}", raw.generator.len()));
    }
    for (i, row) in raw.generator.iter().enumerate() {
        if row.len() != n {
            return bad(format!("generator row {i} has {} entries, expected {n}", row.len()));
        }
        let scale = row.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let sum: f64 = row.iter().sum();
        if !sum.is_finite() || sum.abs() > ROW_SUM_TOL * scale {
            return bad(format!("generator row {i} sums to {sum}"));
        }
        for (j, &a) in row.iter().enumerate() {
            if i == j && a > 0.0 {
                return bad(format!("generator[{i}][{j}] = {a} is positive on the diagonal"));
            }
            if i != j && a < 0.0 {
                return bad(format!("generator[{i}][{j}] = {a} is a negative off-diagonal rate"));
            }
        }
    }
    Ok(RegimeModel {
        r: raw.r.clone(),
        sigma: raw.sigma.clone(),
        q,
        generator: raw.generator.clone(),
    })
}

impl RegimeModel {
    pub fn new(r: Vec<f64>, sigma: Vec<f64>, generator: Vec<Vec<f64>>) -> Result<Self> {
        validate_model(&ModelParams { r, sigma, q: Vec::new(), generator })
    }

    /// Two-state model from exit rates `a12` (1 -> 2) and `a21` (2 -> 1).
    pub fn two_state(r: [f64; 2], sigma: [f64; 2], a12: f64, a21: f64) -> Result<Self> {
        Self::new(r.to_vec(), sigma.to_vec(), vec![vec![-a12, a12], vec![a21, -a21]])
    }

    /// Replaces the dividend yields.
    pub fn with_dividends(&self, q: Vec<f64>) -> Result<Self> {
        let mut p = self.params();
        p.q = q;
        validate_with(&p, RatePolicy::Positive)
    }

    /// Model with rates and dividend yields exchanged. The swapped rates may be
    /// zero, so this bypasses the strict `r > 0` check (rates must stay >= 0).
    pub fn swap_rates_and_dividends(&self) -> Result<Self> {
        let p = ModelParams {
            r: self.q.clone(),
            sigma: self.sigma.clone(),
            q: self.r.clone(),
            generator: self.generator.clone(),
        };
        validate_with(&p, RatePolicy::NonNegative)
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            r: self.r.clone(),
            sigma: self.sigma.clone(),
            q: self.q.clone(),
            generator: self.generator.clone(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.sigma.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn generator(&self) -> &[Vec<f64>] {
        &self.generator
    }

    /// Total exit rate `|a_ii|` of state `i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.generator[i][i]
    }

    /// Stationary distribution of a two-state chain, `(a21, a12) / (a12 + a21)`.
    /// Falls back to `(1/2, 1/2)` when the chain never switches.
    pub fn stationary_two_state(&self) -> Result<[f64; 2]> {
        self.require_two_states()?;
        let a12 = self.generator[0][1];
        let a21 = self.generator[1][0];
        let tot = a12 + a21;
        if tot <= 0.0 {
            return Ok([0.5, 0.5]);
        }
        Ok([a21 / tot, a12 / tot])
    }

    pub fn require_two_states(&self) -> Result<()> {
        if self.n_states() != 2 {
            return Err(PricingError::UnsupportedRegimeCount { expected: 2, found: self.n_states() });
        }
        Ok(())
    }
}

/// `(lambda_i, gamma_i) = (2 a_ii / sigma_i^2, 2 r_i / sigma_i^2)`.
pub fn lambda_gamma(model: &RegimeModel, i: usize) -> (f64, f64) {
    let s2 = model.sigma[i] * model.sigma[i];
    (2.0 * model.generator[i][i] / s2, 2.0 * model.r[i] / s2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionStyle {
    FloatingPut,
    FloatingCall,
    FixedPut,
    FixedCall,
    EuropeanPut,
}

impl OptionStyle {
    pub fn is_floating(self) -> bool {
        matches!(self, OptionStyle::FloatingPut | OptionStyle::FloatingCall)
    }

    pub fn name(self) -> &'static str {
        match self {
            OptionStyle::FloatingPut => "floating_put",
            OptionStyle::FloatingCall => "floating_call",
            OptionStyle::FixedPut => "fixed_put",
            OptionStyle::FixedCall => "fixed_call",
            OptionStyle::EuropeanPut => "european_put",
        }
    }
}

/// Contract descriptor. Averaging is continuous and arithmetic over `[0, expiry]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsianOptionSpec {
    pub style: OptionStyle,
    pub expiry: f64,
    /// Fixed strike; ignored by floating styles.
    #[serde(default)]
    pub strike: f64,
    /// Multiplier on the average in floating payoffs, `(m * avg - S)^+`.
    #[serde(default = "unit")]
    pub multiplier: f64,
}

fn unit() -> f64 {
    1.0
}

impl AsianOptionSpec {
    pub fn floating_put(expiry: f64) -> Self {
        Self { style: OptionStyle::FloatingPut, expiry, strike: 0.0, multiplier: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PricingError::InvalidOption(m));
        if !(self.expiry.is_finite() && self.expiry > 0.0) {
            return bad(format!("expiry {} not > 0", self.expiry));
        }
        if self.style.is_floating() {
            if !(self.multiplier.is_finite() && self.multiplier > 0.0) {
                return bad(format!("multiplier {} not > 0", self.multiplier));
            }
        } else if !(self.strike.is_finite() && self.strike > 0.0) {
            return bad(format!("strike {} not > 0", self.strike));
        }
        Ok(())
    }
}

/// Payoff at expiry from the terminal price and the average `A_T / T`.
pub fn payoff(spec: &AsianOptionSpec, s_t: f64, avg_t: f64) -> f64 {
    let v = match spec.style {
        OptionStyle::FloatingPut => spec.multiplier * avg_t - s_t,
        OptionStyle::FloatingCall => s_t - spec.multiplier * avg_t,
        OptionStyle::FixedPut => spec.strike - avg_t,
        OptionStyle::FixedCall => avg_t - spec.strike,
        OptionStyle::EuropeanPut => spec.strike - s_t,
    };
    v.max(0.0)
}

/// Valuation state: time, spot, running integral `A_t` and current regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketState {
    pub t: f64,
    pub spot: f64,
    #[serde(default)]
    pub running_integral: f64,
    #[serde(default)]
    pub regime: usize,
}

impl MarketState {
    pub fn at_inception(spot: f64, regime: usize) -> Self {
        Self { t: 0.0, spot, running_integral: 0.0, regime }
    }

    pub fn validate(&self, spec: &AsianOptionSpec, model: &RegimeModel) -> Result<()> {
        let bad = |m: String| Err(PricingError::InvalidState(m));
        if !(self.t.is_finite() && self.t >= 0.0 && self.t <= spec.expiry) {
            return bad(format!("t = {} outside [0, {}]", self.t, spec.expiry));
        }
        if !(self.spot.is_finite() && self.spot > 0.0) {
            return bad(format!("spot {} not > 0", self.spot));
        }
        if !(self.running_integral.is_finite() && self.running_integral >= 0.0) {
            return bad(format!("running integral {} not >= 0", self.running_integral));
        }
        if self.t == 0.0 && self.running_integral != 0.0 {
            return bad("running integral must be 0 at t = 0".into());
        }
        if self.regime >= model.n_states() {
            return bad(format!("regime {} but model has {} states", self.regime, model.n_states()));
        }
        Ok(())
    }

    /// `y = A_t / S_t`.
    pub fn ratio(&self) -> f64 {
        self.running_integral / self.spot
    }
}

/// Reduced coordinates of the two-state system: `tau_i = (T - t) sigma_i^2 / 2`, `z = -ln y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCoords {
    pub tau: f64,
    pub z: f64,
}

pub fn to_reduced_coords(
    t: f64,
    y: f64,
    expiry: f64,
    model: &RegimeModel,
    i: usize,
) -> Result<ReducedCoords> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(PricingError::Domain(format!("y = {y} must be > 0")));
    }
    if !(0.0..=expiry).contains(&t) {
        return Err(PricingError::Domain(format!("t = {t} outside [0, {expiry}]")));
    }
    let s = model.sigma[i];
    Ok(ReducedCoords { tau: (expiry - t) * s * s / 2.0, z: -y.ln() })
}

/// Inverse of [`to_reduced_coords`], returning `(t, y)`.
pub fn from_reduced_coords(c: ReducedCoords, expiry: f64, model: &RegimeModel, i: usize) -> (f64, f64) {
    let s = model.sigma[i];
    (expiry - 2.0 * c.tau / (s * s), (-c.z).exp())
}
