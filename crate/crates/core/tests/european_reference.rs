mod common;

use common::fourier_put;
use regime_asian::european::{price_european_put, price_european_put_rs, price_european_put_rs_with, EuropeanRsOptions, MuConvention, QuadRule, QuadratureSpec};
use regime_asian::numerics::special::bs_put;
use regime_asian::RegimeModel;

#[test]
fn fourier_oracle_reproduces_black_scholes() {
    for s in [80.0, 100.0, 120.0] {
        let f = fourier_put([0.05, 0.05], [0.2, 0.2], 0.0, 0.0, s, 100.0, 1.0, 0);
        let bs = bs_put(s, 100.0, 0.05, 0.0, 0.2, 1.0);
        assert!((f - bs).abs() < 1e-9, "{f} {bs}");
    }
}

#[test]
fn closed_form_matches_fourier_with_common_rate() {
    let q = QuadratureSpec::default();
    for (a12, a21) in [(1.0, 1.0), (0.5, 2.0), (3.0, 0.2)] {
        let m = RegimeModel::two_state([0.05, 0.05], [0.3, 0.2], a12, a21).unwrap();
        for s in [80.0, 90.0, 100.0, 110.0, 130.0] {
            for i in 0..2 {
                let p = price_european_put_rs(&m, s, 100.0, 0.0, 1.0, i, &q).unwrap();
                let f = fourier_put([0.05, 0.05], [0.3, 0.2], a12, a21, s, 100.0, 1.0, i);
                assert!((p.price - f).abs() <= p.error_estimate, "a=({a12},{a21}) s={s} i={i}: {p:?} vs {f}");
            }
        }
    }
}

// Frozen from the Fourier oracle above (common rate 0.05, desk volatilities, unit switching).
const FROZEN_COMMON_RATE_ATM: [f64; 2] = [8.359_762_536_5, 6.727_101_387_8];
// Frozen from the Fourier oracle with the desk rates (0.05, 0.03), S in {90, 100, 110}.
const FROZEN_DESK: [[f64; 3]; 2] = [
    [13.196_219_193_6, 8.618_185_571_3, 5.443_692_487_8],
    [12.206_808_012_8, 7.368_147_944_2, 4.210_435_635_8],
];

#[test]
fn frozen_common_rate_values() {
    let m = RegimeModel::two_state([0.05, 0.05], [0.3, 0.2], 1.0, 1.0).unwrap();
    for i in 0..2 {
        let q = QuadratureSpec { rule: QuadRule::Adaptive, rel_tol: 1e-9, abs_tol: 1e-10, ..Default::default() };
        let p = price_european_put_rs(&m, 100.0, 100.0, 0.0, 1.0, i, &q).unwrap();
        assert!((p.price - FROZEN_COMMON_RATE_ATM[i]).abs() < 1e-7, "{p:?}");
        let f = fourier_put([0.05, 0.05], [0.3, 0.2], 1.0, 1.0, 100.0, 100.0, 1.0, i);
        assert!((f - FROZEN_COMMON_RATE_ATM[i]).abs() < 1e-9);
        for (k, s) in [90.0, 100.0, 110.0].into_iter().enumerate() {
            let f = fourier_put([0.05, 0.03], [0.3, 0.2], 1.0, 1.0, s, 100.0, 1.0, i);
            assert!((f - FROZEN_DESK[i][k]).abs() < 1e-9);
        }
    }
}

#[test]
fn printed_coupling_constant_misses_the_oracle() {
    let m = RegimeModel::two_state([0.05, 0.05], [0.3, 0.2], 1.0, 1.0).unwrap();
    let opts = EuropeanRsOptions { mu_convention: MuConvention::Printed, ..Default::default() };
    let q = QuadratureSpec { rule: QuadRule::Adaptive, rel_tol: 1e-4, ..Default::default() };
    let f = fourier_put([0.05, 0.05], [0.3, 0.2], 1.0, 1.0, 100.0, 100.0, 1.0, 0);
    match price_european_put_rs_with(&m, 100.0, 100.0, 0.0, 1.0, 0, &q, opts) {
        Ok(p) => assert!((p.price - f).abs() > 0.1, "{}", p.price),
        Err(_) => {}
    }
}

#[test]
fn distinct_rates_are_approximate() {
    let m = RegimeModel::two_state([0.05, 0.03], [0.3, 0.2], 1.0, 1.0).unwrap();
    let q = QuadratureSpec::default();
    for i in 0..2 {
        let p = price_european_put_rs(&m, 100.0, 100.0, 0.0, 1.0, i, &q).unwrap();
        let f = FROZEN_DESK[i][1];
        let rel = (p.price - f).abs() / f;
        assert!(rel > 0.01 && rel < 0.1, "regime {i}: {} vs {f}", p.price);
    }
}

#[test]
fn decoupled_limit_approaches_black_scholes() {
    let m = RegimeModel::two_state([0.05, 0.05], [0.3, 0.2], 1e-6, 1e-6).unwrap();
    for (i, sig) in [0.3, 0.2].into_iter().enumerate() {
        let p = price_european_put_rs(&m, 100.0, 100.0, 0.0, 1.0, i, &QuadratureSpec::default()).unwrap();
        let bs = bs_put(100.0, 100.0, 0.05, 0.0, sig, 1.0);
        assert!((p.price - bs).abs() < 1e-4, "{} {bs}", p.price);
    }
}

#[test]
fn fast_switching_pulls_regimes_together() {
    let q = QuadratureSpec { rule: QuadRule::Adaptive, ..Default::default() };
    let mut last = f64::INFINITY;
    for a in [1.0, 10.0, 100.0] {
        let m = RegimeModel::two_state([0.05, 0.05], [0.3, 0.2], a, a).unwrap();
        let v1 = price_european_put_rs(&m, 100.0, 100.0, 0.0, 1.0, 0, &q).unwrap().price;
        let v2 = price_european_put_rs(&m, 100.0, 100.0, 0.0, 1.0, 1, &q).unwrap().price;
        assert!((v1 - v2).abs() < last);
        last = (v1 - v2).abs();
    }
}

#[test]
fn equal_volatilities_fall_back() {
    let q = QuadratureSpec::default();
    let m = RegimeModel::two_state([0.05, 0.05], [0.2, 0.2], 1.0, 1.0).unwrap();
    let (p, how) = price_european_put(&m, 100.0, 100.0, 0.0, 1.0, 0, &q).unwrap();
    assert_eq!(how, "black_scholes");
    assert!((p - bs_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0)).abs() < 1e-12);
    let m = RegimeModel::two_state([0.05, 0.03], [0.2, 0.2], 1.0, 1.0).unwrap();
    let (p, how) = price_european_put(&m, 100.0, 100.0, 0.0, 1.0, 0, &q).unwrap();
    assert_eq!(how, "fd");
    let f = fourier_put([0.05, 0.03], [0.2, 0.2], 1.0, 1.0, 100.0, 100.0, 1.0, 0);
    assert!((p - f).abs() < 5e-3, "{p} {f}");
}


#[test]
fn slice_evaluator_matches_closed_form() {
    use regime_asian::european::EuropeanSlice;
    let q = QuadratureSpec { rule: QuadRule::Adaptive, rel_tol: 1e-8, abs_tol: 1e-10, ..Default::default() };
    for r in [[0.05, 0.05], [0.05, 0.03]] {
        let m = RegimeModel::two_state(r, [0.3, 0.2], 1.0, 2.0).unwrap();
        for tau in [0.05, 0.5, 1.0] {
            for i in 0..2 {
                let sl = EuropeanSlice::new(&m, i, tau, 200.0, MuConvention::Corrected).unwrap();
                for k in [0.5, 0.9, 1.0, 1.2, 2.0] {
                    let a = sl.put(1.0, k);
                    let b = price_european_put_rs(&m, 1.0, k, 0.0, tau, i, &q).unwrap();
                    assert!((a - b.price).abs() < 1e-7, "tau {tau} i {i} k {k}: {a} vs {b:?}");
                }
            }
        }
    }
}
