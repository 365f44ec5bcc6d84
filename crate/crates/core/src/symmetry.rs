//! Fixed/floating symmetry for contracts written at `t = 0`.
//!
//! With rates and dividend yields exchanged,
//!
//! * `C_f(s, lambda) = P_x(spot lambda s, strike s)`
//! * `P_f(s, lambda) = C_x(spot lambda s, strike s)`
//!
//! and conversely `C_x(x, k) = P_f(spot k, multiplier x / k)`, `P_x(x, k) =
//! C_f(spot k, multiplier x / k)`. The map is an involution. The argument is
//! a time reversal of the price path, so the starting regime of one side
//! corresponds to the terminal regime of the other: regime by regime the
//! identity only holds for chains started from a reversible (stationary)
//! distribution.

use serde::Serialize;

use crate::error::{PricingError, Result};
use crate::model::{AsianOptionSpec, MarketState, OptionStyle, RegimeModel};
use crate::oracles::mc::{mc_price_from, McConfig, McEstimate, Start};

/// One side in six-argument form `(spot, strike-or-multiplier, r-role, delta-role, t*, T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetrySide {
    pub style: OptionStyle,
    pub spot: f64,
    pub strike_or_multiplier: f64,
    /// Symbol of the rate vector relative to the original model: `r`, `0` or `delta`.
    pub rate_role: &'static str,
    pub dividend_role: &'static str,
    pub t_star: f64,
    pub expiry: f64,
}

impl SymmetrySide {
    pub fn notation(&self) -> String {
        let name = match self.style {
            OptionStyle::FloatingCall => "C_f",
            OptionStyle::FloatingPut => "P_f",
            OptionStyle::FixedCall => "C_x",
            OptionStyle::FixedPut => "P_x",
            OptionStyle::EuropeanPut => "P_e",
        };
        format!(
            "{name}({}, {}, {}, {}, {}, {})",
            self.spot, self.strike_or_multiplier, self.rate_role, self.dividend_role, self.t_star, self.expiry
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryCase {
    pub lhs: SymmetrySide,
    pub rhs: SymmetrySide,
}

fn role(v: &[f64], model: &RegimeModel) -> &'static str {
    if v.iter().all(|&x| x == 0.0) {
        "0"
    } else if v == model.r() {
        "r"
    } else if v == model.q() {
        "delta"
    } else {
        "other"
    }
}

fn side(spec: &AsianOptionSpec, spot: f64, m: &RegimeModel, original: &RegimeModel) -> SymmetrySide {
    let k = if spec.style.is_floating() { spec.multiplier } else { spec.strike };
    SymmetrySide {
        style: spec.style,
        spot,
        strike_or_multiplier: k,
        rate_role: role(m.r(), original),
        dividend_role: role(m.q(), original),
        t_star: 0.0,
        expiry: spec.expiry,
    }
}

/// The contract, inception state and model on the other side of the symmetry.
pub fn symmetric_counterpart(
    spec: &AsianOptionSpec,
    state: &MarketState,
    model: &RegimeModel,
) -> Result<(AsianOptionSpec, MarketState, RegimeModel)> {
    spec.validate()?;
    state.validate(spec, model)?;
    if state.t != 0.0 || state.running_integral != 0.0 {
        return Err(PricingError::NotApplicable("symmetry holds for contracts written at t = 0 with a = 0".into()));
    }
    let s = state.spot;
    let (style, spot, strike, multiplier) = match spec.style {
        OptionStyle::FloatingCall => (OptionStyle::FixedPut, spec.multiplier * s, s, 1.0),
        OptionStyle::FloatingPut => (OptionStyle::FixedCall, spec.multiplier * s, s, 1.0),
        OptionStyle::FixedPut => (OptionStyle::FloatingCall, spec.strike, 0.0, s / spec.strike),
        OptionStyle::FixedCall => (OptionStyle::FloatingPut, spec.strike, 0.0, s / spec.strike),
        OptionStyle::EuropeanPut => {
            return Err(PricingError::NotApplicable("no Asian counterpart for a European put".into()))
        }
    };
    let out = AsianOptionSpec { style, expiry: spec.expiry, strike, multiplier };
    let st = MarketState { spot, ..*state };
    Ok((out, st, model.swap_rates_and_dividends()?))
}

pub fn symmetry_case(spec: &AsianOptionSpec, state: &MarketState, model: &RegimeModel) -> Result<SymmetryCase> {
    let (rspec, rstate, rmodel) = symmetric_counterpart(spec, state, model)?;
    Ok(SymmetryCase { lhs: side(spec, state.spot, model, model), rhs: side(&rspec, rstate.spot, &rmodel, model) })
}

/// Both sides priced by Monte Carlo from the same starting law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryMc {
    pub case: SymmetryCase,
    pub lhs: McEstimate,
    pub rhs: McEstimate,
}

impl SymmetryMc {
    /// `|lhs - rhs|` in combined standard errors.
    pub fn z_score(&self) -> f64 {
        (self.lhs.price - self.rhs.price).abs() / self.lhs.std_error.hypot(self.rhs.std_error)
    }
}

pub fn check_by_mc(
    spec: &AsianOptionSpec,
    state: &MarketState,
    model: &RegimeModel,
    cfg: &McConfig,
    start: &Start,
) -> Result<SymmetryMc> {
    let (rspec, rstate, rmodel) = symmetric_counterpart(spec, state, model)?;
    let case = symmetry_case(spec, state, model)?;
    let lhs = mc_price_from(spec, state, model, cfg, start)?;
    let rhs = mc_price_from(&rspec, &rstate, &rmodel, cfg, start)?;
    Ok(SymmetryMc { case, lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> RegimeModel {
        RegimeModel::two_state([0.05, 0.03], [0.3, 0.2], 1.0, 1.0).unwrap()
    }

    #[test]
    fn floating_call_maps_to_fixed_put() {
        let spec = AsianOptionSpec { style: OptionStyle::FloatingCall, expiry: 1.0, strike: 0.0, multiplier: 1.0 };
        let st = MarketState::at_inception(100.0, 0);
        let case = symmetry_case(&spec, &st, &desk()).unwrap();
        assert_eq!(case.lhs.notation(), "C_f(100, 1, r, 0, 0, 1)");
        assert_eq!(case.rhs.notation(), "P_x(100, 100, 0, r, 0, 1)");
    }

    #[test]
    fn fixed_call_maps_to_floating_put() {
        let spec = AsianOptionSpec { style: OptionStyle::FixedCall, expiry: 1.0, strike: 100.0, multiplier: 1.0 };
        let st = MarketState::at_inception(120.0, 1);
        let (s2, st2, m2) = symmetric_counterpart(&spec, &st, &desk()).unwrap();
        assert_eq!(s2.style, OptionStyle::FloatingPut);
        assert!((s2.multiplier - 1.2).abs() < 1e-15);
        assert_eq!(st2.spot, 100.0);
        assert_eq!(st2.regime, 1);
        assert_eq!(m2.r(), &[0.0, 0.0]);
        assert_eq!(m2.q(), &[0.05, 0.03]);
    }

    #[test]
    fn rejects_seasoned_contracts() {
        let spec = AsianOptionSpec::floating_put(1.0);
        let st = MarketState { t: 0.5, spot: 100.0, running_integral: 40.0, regime: 0 };
        assert!(matches!(symmetric_counterpart(&spec, &st, &desk()), Err(PricingError::NotApplicable(_))));
    }
}
