//! Floating-strike Asian option pricing under a two-state regime-switching
//! geometric Brownian motion.
//!
//! The main pricer is a homotopy-analysis series for the reduced coupled
//! system in `z = -ln(A / S)` ([`ham`]). It is seeded by a closed-form
//! regime-switching European put ([`european`]) and checked against Monte
//! Carlo and finite-difference oracles ([`oracles`]). [`symmetry`] maps
//! floating-strike contracts to fixed-strike ones by swapping rates and
//! dividend yields.

pub mod error;
pub mod european;
pub mod ham;
pub mod model;
pub mod numerics;
pub mod oracles;
pub mod result;
pub mod symmetry;

pub use error::{PricingError, Result};
pub use model::{
    lambda_gamma, payoff, validate_model, AsianOptionSpec, MarketState, ModelParams, OptionStyle,
    RegimeModel,
};
pub use result::{Diagnostics, Method, PriceResult};
