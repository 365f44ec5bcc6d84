use std::sync::OnceLock;

use regime_asian::ham::greens::{delta_error, residual_samples, select_variant, GreensVariant};
use regime_asian::ham::residual::{boundary_decay, initial_condition_is_zero, recursion_residual, ResidualRegion};
use regime_asian::ham::*;
use regime_asian::*;

fn desk() -> RegimeModel {
    RegimeModel::two_state([0.05, 0.03], [0.3, 0.2], 1.0, 1.0).unwrap()
}

fn small() -> HamConfig {
    HamConfig { n_z: 201, n_u: 41, m_trunc: 2, ..Default::default() }
}

struct Fixture {
    solver: HamSolver,
    terms: Vec<TermGrid>,
}

fn default_fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let solver = HamSolver::new(&desk(), 1.0, &HamConfig::default()).unwrap();
        let (terms, _) = solver.terms(2).unwrap();
        Fixture { solver, terms }
    })
}

fn small_fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let solver = HamSolver::new(&desk(), 1.0, &small()).unwrap();
        let (terms, _) = solver.terms(3).unwrap();
        Fixture { solver, terms }
    })
}

#[test]
fn heat_residual_selects_the_tau_exponent() {
    let (v, r) = select_variant(&residual_samples(), 1e-6).unwrap();
    assert_eq!(v, GreensVariant::WithTau);
    assert!(r < 1e-6);
    assert_eq!(HamConfig::default().greens_variant, GreensVariant::WithTau);
}

#[test]
fn delta_property_is_first_order_for_two_test_functions() {
    let bump = |x: f64| if x > 0.4 && x < 2.6 { ((x - 0.4) * (2.6 - x)).powi(4) } else { 0.0 };
    let wave = |x: f64| if x > 0.5 && x < 3.0 { (std::f64::consts::PI * (x - 0.5) / 2.5).sin().powi(4) } else { 0.0 };
    let tests: [&dyn Fn(f64) -> f64; 2] = [&bump, &wave];
    for phi in tests {
        for z in [1.2, 1.7] {
            let err = |tau| delta_error(phi, (0.4, 3.2), tau, z, 2.5, GreensVariant::WithTau).unwrap();
            let (e1, e2) = (err(1e-3), err(5e-4));
            assert!(e1 < 2e-2, "{z}: {e1}");
            assert!((e1 / e2 - 2.0).abs() < 0.25, "{z}: ratio {}", e1 / e2);
        }
    }
}

#[test]
fn first_two_terms_solve_their_heat_equations() {
    let f = default_fixture();
    let region = ResidualRegion::default();
    for m in 1..=2 {
        for i in 0..2 {
            let r = recursion_residual(&f.solver, &f.terms[m - 1], &f.terms[m], i, &region);
            assert!(r < 1e-3, "term {m} regime {i}: {r:e}");
        }
    }
}

#[test]
fn terms_start_at_zero_and_decay_at_the_far_edge() {
    let f = default_fixture();
    for t in &f.terms[1..] {
        assert!(initial_condition_is_zero(t));
    }
    for t in &f.terms {
        for i in 0..2 {
            assert!(boundary_decay(t, i) < 1e-6, "term {} regime {i}", t.m);
        }
    }
}

#[test]
fn european_guess_is_small_at_far_edge() {
    let f = small_fixture();
    let g = &f.terms[0];
    let last = f.solver.grid().n_z() - 1;
    for n in 0..f.solver.grid().n_u() {
        for i in 0..2 {
            assert!(g.at(i, n, last).abs() < 1e-8);
        }
    }
}

#[test]
fn zero_guess_gives_zero_terms() {
    let f = small_fixture();
    let z = f.solver.initial_guess(InitialGuess::Zero).unwrap();
    assert!(z.is_identically_zero());
    assert!(f.solver.step(&z).unwrap().is_identically_zero());
}

#[test]
fn decoupled_regimes_ignore_each_other() {
    let m = RegimeModel::two_state([0.05, 0.03], [0.3, 0.2], 0.0, 0.0).unwrap();
    let s = HamSolver::new(&m, 1.0, &small()).unwrap();
    let t0 = s.term_zero().unwrap();
    let mut other = t0.values.clone();
    for v in other[1].iter_mut() {
        *v *= 3.0;
    }
    let t0b = TermGrid::from_values(0, s.grid(), other).unwrap();
    let a = s.step(&t0).unwrap();
    let b = s.step(&t0b).unwrap();
    assert_eq!(a.values[0], b.values[0]);
}

#[test]
fn assembly_is_linear_and_truncates_to_the_guess() {
    let f = small_fixture();
    let g = f.solver.grid();
    let norm = SeriesNormalization::Factorial;
    let base = assemble_series(&f.terms, g, norm).unwrap();
    let scaled: Vec<TermGrid> = f.terms.iter().map(|t| t.scaled(2.5)).collect();
    let twice = assemble_series(&scaled, g, norm).unwrap();
    for i in 0..2 {
        for (a, b) in base.values[i].iter().zip(&twice.values[i]) {
            assert!((2.5 * a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }
    let only_guess = assemble_series(&f.terms[..1], g, norm).unwrap();
    assert_eq!(only_guess.values, f.terms[0].values);
    let zeros: Vec<TermGrid> = (1..3).map(|m| TermGrid::zeros(m, g)).collect();
    let mut padded = vec![f.terms[0].clone()];
    padded.extend(zeros);
    assert_eq!(assemble_series(&padded, g, norm).unwrap().values, f.terms[0].values);
}

#[test]
fn price_at_expiry_is_the_payoff() {
    let f = small_fixture();
    let spec = AsianOptionSpec::floating_put(1.0);
    for (a, s) in [(120.0, 100.0), (80.0, 100.0)] {
        let st = MarketState { t: 1.0, spot: s, running_integral: a, regime: 0 };
        let p = price_from_terms(&f.solver, &f.terms, &spec, &st).unwrap();
        assert!((p.price - f64::max(a - s, 0.0)).abs() < 1e-10, "{a}: {}", p.price);
    }
}

#[test]
fn dollar_price_is_homogeneous() {
    let f = small_fixture();
    let spec = AsianOptionSpec::floating_put(1.0);
    let st = MarketState { t: 0.5, spot: 100.0, running_integral: 48.0, regime: 1 };
    let p = price_from_terms(&f.solver, &f.terms, &spec, &st).unwrap().price;
    for c in [0.5, 2.0, 7.0] {
        let sc = MarketState { spot: c * st.spot, running_integral: c * st.running_integral, ..st };
        let q = price_from_terms(&f.solver, &f.terms, &spec, &sc).unwrap().price;
        assert!((q - c * p).abs() <= 1e-12 * (c * p).abs().max(1e-12));
    }
}

#[test]
fn states_off_the_grid_are_refused() {
    let f = small_fixture();
    let spec = AsianOptionSpec::floating_put(1.0);
    let far = MarketState { t: 0.5, spot: 100.0, running_integral: 1e-4, regime: 0 };
    assert!(matches!(price_from_terms(&f.solver, &f.terms, &spec, &far), Err(PricingError::ExtrapolationRefused(_))));
    let at_zero = MarketState::at_inception(100.0, 0);
    assert!(price_from_terms(&f.solver, &f.terms, &spec, &at_zero).is_ok());
}

#[test]
fn desk_diagnostics_are_finite() {
    let f = small_fixture();
    let spec = AsianOptionSpec::floating_put(1.0);
    let p = price_from_terms(&f.solver, &f.terms, &spec, &MarketState::at_inception(100.0, 0)).unwrap();
    assert_eq!(p.diagnostics.term_norms.len(), 4);
    assert!(p.diagnostics.term_norms.iter().all(|x| x.is_finite()));
    assert!(p.diagnostics.partial_prices.iter().all(|x| x.is_finite()));
}
