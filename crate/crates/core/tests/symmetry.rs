use regime_asian::oracles::mc::{McConfig, Start};
use regime_asian::symmetry::{check_by_mc, symmetric_counterpart};
use regime_asian::*;

fn desk() -> RegimeModel {
    RegimeModel::two_state([0.05, 0.03], [0.3, 0.2], 1.0, 1.0).unwrap()
}

fn floating(style: OptionStyle, multiplier: f64) -> AsianOptionSpec {
    AsianOptionSpec { style, expiry: 1.0, strike: 0.0, multiplier }
}

#[test]
fn counterpart_of_counterpart_is_the_original() {
    let st = MarketState::at_inception(100.0, 1);
    for spec in [
        floating(OptionStyle::FloatingCall, 1.0),
        floating(OptionStyle::FloatingPut, 0.9),
        AsianOptionSpec { style: OptionStyle::FixedPut, expiry: 1.0, strike: 95.0, multiplier: 1.0 },
    ] {
        let (s1, st1, m1) = symmetric_counterpart(&spec, &st, &desk()).unwrap();
        let (s2, st2, m2) = symmetric_counterpart(&s1, &st1, &m1).unwrap();
        assert_eq!(s2.style, spec.style);
        assert!((st2.spot - st.spot).abs() < 1e-12);
        let k = |s: &AsianOptionSpec| if s.style.is_floating() { s.multiplier } else { s.strike };
        assert!((k(&s2) - k(&spec)).abs() < 1e-12);
        assert_eq!(m2.r(), desk().r());
        assert_eq!(m2.q(), desk().q());
    }
}

#[test]
fn single_regime_symmetry_holds_by_mc() {
    let m = RegimeModel::new(vec![0.04], vec![0.25], vec![vec![0.0]]).unwrap();
    let cfg = McConfig { n_paths: 100_000, n_steps: 50, seed: 17, ..Default::default() };
    let st = MarketState::at_inception(100.0, 0);
    for style in [OptionStyle::FloatingCall, OptionStyle::FloatingPut] {
        let s = check_by_mc(&floating(style, 1.0), &st, &m, &cfg, &Start::Regime(0)).unwrap();
        assert!(s.z_score() < 3.0, "{style:?}: {s:?}");
    }
}

// The identity reverses time, so the regime path runs backwards: it holds
// for a stationary start but not conditionally on the starting regime.
#[test]
fn two_regime_symmetry_needs_a_stationary_start() {
    let cfg = McConfig { n_paths: 100_000, n_steps: 50, seed: 5, ..Default::default() };
    let spec = floating(OptionStyle::FloatingCall, 1.0);
    let st = MarketState::at_inception(100.0, 0);
    let pi = desk().stationary_two_state().unwrap();
    let stationary = check_by_mc(&spec, &st, &desk(), &cfg, &Start::Distribution(pi.to_vec())).unwrap();
    assert!(stationary.z_score() < 3.0, "{stationary:?}");
    let conditional = check_by_mc(&spec, &st, &desk(), &cfg, &Start::Regime(0)).unwrap();
    assert!(conditional.z_score() > 3.0, "{conditional:?}");
}
