//! Monte Carlo pricer under the Markov-modulated GBM.
//!
//! Regime switch times are merged into the time grid, so the asset moves
//! exactly (lognormally) within every segment; the average uses the
//! trapezoid rule on the merged grid. Each batch of paths owns one ChaCha
//! stream, so estimates do not depend on the number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::model::{payoff, AsianOptionSpec, MarketState, OptionStyle, RegimeModel};
use crate::oracles::chain::{sample_regime, simulate_chain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    /// Number of samples. With `antithetic` each sample averages a path and its mirror.
    pub n_paths: u64,
    /// Time steps per year for the average integral.
    pub n_steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
    #[serde(default = "default_batch")]
    pub batch_size: u64,
}

fn default_batch() -> u64 {
    8192
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, n_steps: 100, seed: 42, antithetic: false, batch_size: default_batch() }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 || self.n_steps < 1 || self.batch_size < 1 {
            return Err(PricingError::InvalidConfig("mc n_paths, n_steps and batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: u64,
}

/// Initial regime of every path.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Regime(usize),
    /// Regime drawn per path from this law.
    Distribution(Vec<f64>),
}

pub fn mc_price(
    spec: &AsianOptionSpec,
    state: &MarketState,
    model: &RegimeModel,
    cfg: &McConfig,
) -> Result<McEstimate> {
    mc_price_from(spec, state, model, cfg, &Start::Regime(state.regime))
}

pub fn mc_price_from(
    spec: &AsianOptionSpec,
    state: &MarketState,
    model: &RegimeModel,
    cfg: &McConfig,
    start: &Start,
) -> Result<McEstimate> {
    spec.validate()?;
    cfg.validate()?;
    state.validate(spec, model)?;
    if let Start::Distribution(p) = start {
        if p.len() != model.n_states() || p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(PricingError::InvalidConfig("start distribution is not a probability vector".into()));
        }
    }
    let n_batches = cfg.n_paths.div_ceil(cfg.batch_size);
    let stats: Vec<Moments> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b);
            let count = cfg.batch_size.min(cfg.n_paths - b * cfg.batch_size);
            let mut sim = PathSim::new(spec, state, model, cfg);
            let mut m = Moments::default();
            for _ in 0..count {
                let regime = match start {
                    Start::Regime(i) => *i,
                    Start::Distribution(p) => sample_regime(p, &mut rng),
                };
                m.push(sim.sample(regime, &mut rng));
            }
            m
        })
        .collect();
    let total = stats.into_iter().fold(Moments::default(), Moments::merge);
    let var = if total.n > 1 { total.m2 / (total.n - 1) as f64 } else { 0.0 };
    Ok(McEstimate { price: total.mean, std_error: (var / total.n as f64).sqrt(), n_paths: total.n })
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Moments {
            n,
            mean: a.mean + d * b.n as f64 / n as f64,
            m2: a.m2 + b.m2 + d * d * (a.n as f64 * b.n as f64) / n as f64,
        }
    }
}

struct PathSim<'a> {
    spec: &'a AsianOptionSpec,
    state: &'a MarketState,
    model: &'a RegimeModel,
    antithetic: bool,
    n_grid: usize,
    normals: Vec<f64>,
}

impl<'a> PathSim<'a> {
    fn new(spec: &'a AsianOptionSpec, state: &'a MarketState, model: &'a RegimeModel, cfg: &McConfig) -> Self {
        let span = spec.expiry - state.t;
        let n_grid = if spec.style == OptionStyle::EuropeanPut {
            1
        } else {
            ((span * cfg.n_steps as f64).ceil() as usize).max(1)
        };
        Self { spec, state, model, antithetic: cfg.antithetic, n_grid, normals: Vec::with_capacity(n_grid + 8) }
    }

    fn sample(&mut self, regime: usize, rng: &mut ChaCha8Rng) -> f64 {
        let chain = simulate_chain(self.model, regime, self.state.t, self.spec.expiry, rng);
        self.normals.clear();
        let v = self.walk(&chain, Some(rng), 1.0);
        if self.antithetic {
            0.5 * (v + self.walk(&chain, None, -1.0))
        } else {
            v
        }
    }

    /// Walks one path. With `rng` set, fresh normals are drawn and recorded;
    /// otherwise the recorded normals are replayed times `sign`.
    fn walk(&mut self, chain: &[(usize, f64)], mut rng: Option<&mut ChaCha8Rng>, sign: f64) -> f64 {
        let t0 = self.state.t;
        let expiry = self.spec.expiry;
        let dt = (expiry - t0) / self.n_grid as f64;
        let r = self.model.r();
        let q = self.model.q();
        let sig = self.model.sigma();

        let mut s = self.state.spot;
        let mut a = self.state.running_integral;
        let mut disc = 0.0;
        let mut regime = chain[0].0;
        let mut next_switch = 1;
        let mut k = 1;
        let mut t = t0;
        let mut draw = 0;
        while k <= self.n_grid {
            let grid_t = if k == self.n_grid { expiry } else { t0 + k as f64 * dt };
            let switch_t = chain.get(next_switch).map_or(f64::INFINITY, |x| x.1);
            let end = grid_t.min(switch_t);
            let h = end - t;
            if h > 0.0 {
                let z = match rng.as_deref_mut() {
                    Some(g) => {
                        let z: f64 = StandardNormal.sample(g);
                        self.normals.push(z);
                        z
                    }
                    None => sign * self.normals[draw],
                };
                draw += 1;
                let sg = sig[regime];
                let s_new = s * ((r[regime] - q[regime] - 0.5 * sg * sg) * h + sg * h.sqrt() * z).exp();
                a += 0.5 * (s + s_new) * h;
                disc += r[regime] * h;
                s = s_new;
            }
            t = end;
            if switch_t < grid_t {
                regime = chain[next_switch].0;
                next_switch += 1;
            } else {
                k += 1;
            }
        }
        (-disc).exp() * payoff(self.spec, s, a / expiry)
    }
}
