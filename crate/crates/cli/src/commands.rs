use std::path::Path;
use std::time::Instant;

use regime_asian::european::{price_european_put_rs_with, EuropeanRsOptions};
use regime_asian::ham::{price_floating_put_ham, price_from_terms, HamConfig, HamSolver, InitialGuess};
use regime_asian::oracles::fd::fd_price_state;
use regime_asian::oracles::mc::{mc_price, Start};
use regime_asian::symmetry::check_by_mc;
use regime_asian::{Diagnostics, MarketState, Method, OptionStyle, PriceResult, PricingError};

use crate::config::{EuropeanRsMethod, Format, MethodBlock, Resolved, RunConfig};
use crate::error::{CliError, CliResult};
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Price,
    Compare,
    Convergence,
    SymmetryCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Price => "price",
            Command::Compare => "compare",
            Command::Convergence => "convergence",
            Command::SymmetryCheck => "symmetry-check",
        }
    }
}

const PRICE_COLUMNS: [&str; 6] = ["method", "price", "error_estimate", "std_error", "runtime_ms", "diagnostics"];

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// `key=value` pairs separated by `; `, lists space separated.
pub fn diagnostics_text(d: &Diagnostics) -> String {
    let mut parts = Vec::new();
    if !d.term_norms.is_empty() {
        parts.push(format!("term_norms={}", join(&d.term_norms)));
    }
    if !d.partial_prices.is_empty() {
        parts.push(format!("partial_prices={}", join(&d.partial_prices)));
    }
    if let Some(se) = d.std_error {
        parts.push(format!("std_error={se:?}"));
    }
    if let Some(o) = d.richardson_order {
        parts.push(format!("richardson_order={o:?}"));
    }
    if !d.notes.is_empty() {
        parts.push(format!("notes={}", d.notes.join(" / ")));
    }
    parts.join("; ")
}

struct Priced {
    label: String,
    result: PriceResult,
    millis: f64,
}

fn timed<T>(f: impl FnOnce() -> CliResult<T>) -> CliResult<(T, f64)> {
    let t0 = Instant::now();
    let v = f()?;
    Ok((v, t0.elapsed().as_secs_f64() * 1e3))
}

fn ham_rows(r: &Resolved, h: &HamConfig, truncations: &[usize]) -> CliResult<Vec<Priced>> {
    let top = truncations.iter().copied().max().unwrap_or(h.m_trunc);
    let cfg = HamConfig { m_trunc: top, ..*h };
    if truncations.is_empty() {
        let (result, millis) = timed(|| Ok(price_floating_put_ham(&r.spec, &r.state, &r.model, &cfg)?))?;
        return Ok(vec![Priced { label: "ham".into(), result, millis }]);
    }
    let ((solver, terms, notes), build_ms) = timed(|| {
        let s = HamSolver::new(&r.model, r.spec.expiry, &cfg)?;
        let (t, n) = s.terms(top)?;
        Ok((s, t, n))
    })?;
    truncations
        .iter()
        .map(|&m| {
            let (mut result, ms) = timed(|| Ok(price_from_terms(&solver, &terms[..=m], &r.spec, &r.state)?))?;
            result.diagnostics.notes.extend(notes.iter().cloned());
            Ok(Priced { label: format!("ham(m_trunc={m})"), result, millis: build_ms + ms })
        })
        .collect()
}

fn mc_row(r: &Resolved, cfg: &regime_asian::oracles::mc::McConfig) -> CliResult<Priced> {
    let (e, millis) = timed(|| Ok(mc_price(&r.spec, &r.state, &r.model, cfg)?))?;
    let result = PriceResult {
        price: e.price,
        method: Method::Mc,
        error_estimate: e.std_error,
        diagnostics: Diagnostics { std_error: Some(e.std_error), ..Default::default() },
    };
    Ok(Priced { label: "mc".into(), result, millis })
}

fn european_row(r: &Resolved, e: &EuropeanRsMethod) -> CliResult<Priced> {
    if r.spec.style != OptionStyle::EuropeanPut {
        return Err(PricingError::NotApplicable(format!(
            "european_rs prices european_put, not {}",
            r.spec.style.name()
        ))
        .into());
    }
    let opts = EuropeanRsOptions { mu_convention: e.mu_convention, theta_shift: 0.0 };
    let (p, millis) = timed(|| {
        let s = &r.state;
        Ok(price_european_put_rs_with(&r.model, s.spot, r.spec.strike, s.t, r.spec.expiry, s.regime, &e.quadrature, opts)?)
    })?;
    let result = PriceResult {
        price: p.price,
        method: Method::EuropeanRs,
        error_estimate: p.error_estimate,
        diagnostics: Diagnostics {
            notes: vec![format!("rule={:?} evaluations={}", p.rule_used, p.evaluations)],
            ..Default::default()
        },
    };
    Ok(Priced { label: "european_rs".into(), result, millis })
}

fn fd_row(r: &Resolved, f: &regime_asian::oracles::fd::FdConfig) -> CliResult<Priced> {
    let (result, millis) = timed(|| Ok(fd_price_state(&r.spec, &r.state, &r.model, f)?))?;
    Ok(Priced { label: "fd".into(), result, millis })
}

fn price_table(rows: Vec<Priced>, timing: bool) -> Table {
    let mut t = Table::new(PRICE_COLUMNS.to_vec());
    for p in rows {
        let d = &p.result.diagnostics;
        t.push(vec![
            p.label.into(),
            p.result.price.into(),
            p.result.error_estimate.into(),
            d.std_error.into(),
            if timing { Cell::Num(p.millis) } else { Cell::Empty },
            diagnostics_text(d).into(),
        ]);
    }
    t
}

pub fn price(cfg: &RunConfig) -> CliResult<Table> {
    let r = cfg.resolve()?;
    let row = match &cfg.method {
        MethodBlock::Ham(h) => ham_rows(&r, h, &[])?.remove(0),
        MethodBlock::Mc(m) => mc_row(&r, m)?,
        MethodBlock::Fd(f) => fd_row(&r, f)?,
        MethodBlock::EuropeanRs(e) => european_row(&r, e)?,
        MethodBlock::Compare(_) => {
            return Err(CliError::Validation("price needs a single method; use the compare command".into()))
        }
    };
    Ok(price_table(vec![row], cfg.output.include_timing))
}

/// One row per configured method, in the order ham, european_rs, fd, mc.
pub fn compare(cfg: &RunConfig) -> CliResult<Table> {
    let r = cfg.resolve()?;
    let mut rows = Vec::new();
    match &cfg.method {
        MethodBlock::Compare(c) => {
            if let Some(h) = &c.ham {
                let truncs = if c.ham_truncations.is_empty() { vec![h.m_trunc] } else { c.ham_truncations.clone() };
                rows.extend(ham_rows(&r, h, &truncs)?);
            }
            if let Some(e) = &c.european_rs {
                rows.push(european_row(&r, e)?);
            }
            if let Some(f) = &c.fd {
                rows.push(fd_row(&r, f)?);
            }
            if let Some(m) = &c.mc {
                rows.push(mc_row(&r, m)?);
            }
        }
        _ => return price(cfg),
    }
    Ok(price_table(rows, cfg.output.include_timing))
}

/// Assembled price after each added term, for the European and the zero guess.
pub fn convergence(cfg: &RunConfig) -> CliResult<Table> {
    let r = cfg.resolve()?;
    let h = cfg.ham().ok_or_else(|| CliError::Validation("convergence needs a ham block".into()))?;
    let mut t = Table::new(vec!["initial_guess", "m", "price", "delta", "term_norm"]);
    for (name, guess) in [("european_rs", InitialGuess::EuropeanRs), ("zero", InitialGuess::Zero)] {
        let c = HamConfig { initial_guess: guess, ..*h };
        let p = price_floating_put_ham(&r.spec, &r.state, &r.model, &c)?;
        let d = &p.diagnostics;
        for (m, (&price, &norm)) in d.partial_prices.iter().zip(&d.term_norms).enumerate() {
            let delta = if m == 0 { Cell::Empty } else { Cell::Num(price - d.partial_prices[m - 1]) };
            t.push(vec![name.into(), Cell::Int(m as u64), price.into(), delta, norm.into()]);
        }
    }
    Ok(t)
}

/// Both sides of the fixed/floating symmetry by Monte Carlo, from every
/// starting regime and from the stationary law.
pub fn symmetry_check(cfg: &RunConfig) -> CliResult<Table> {
    let r = cfg.resolve()?;
    let mc = cfg.mc().ok_or_else(|| CliError::Validation("symmetry-check needs an mc block".into()))?;
    let mut t = Table::new(vec![
        "start",
        "lhs",
        "rhs",
        "lhs_price",
        "lhs_std_error",
        "rhs_price",
        "rhs_std_error",
        "z_score",
    ]);
    let mut starts: Vec<(String, MarketState, Start)> = (0..r.model.n_states())
        .map(|i| (format!("regime {i}"), MarketState { regime: i, ..r.state }, Start::Regime(i)))
        .collect();
    if r.model.n_states() == 2 {
        let pi = r.model.stationary_two_state()?;
        starts.push(("stationary".into(), r.state, Start::Distribution(pi.to_vec())));
    }
    for (label, state, start) in starts {
        let s = check_by_mc(&r.spec, &state, &r.model, mc, &start)?;
        t.push(vec![
            label.into(),
            s.case.lhs.notation().into(),
            s.case.rhs.notation().into(),
            s.lhs.price.into(),
            s.lhs.std_error.into(),
            s.rhs.price.into(),
            s.rhs.std_error.into(),
            s.z_score().into(),
        ]);
    }
    Ok(t)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Write { path: path.display().to_string(), source })
}

/// Loads the config, materializes defaults, runs `cmd` and writes the report.
pub fn run(cmd: Command, config_path: &Path, emit_config: Option<&Path>) -> CliResult<()> {
    let cfg = RunConfig::load(config_path)?.effective()?;
    if let Some(p) = emit_config {
        write_file(p, &cfg.to_json())?;
    }
    let table = match cmd {
        Command::Price => price(&cfg)?,
        Command::Compare => compare(&cfg)?,
        Command::Convergence => convergence(&cfg)?,
        Command::SymmetryCheck => symmetry_check(&cfg)?,
    };
    let text = match cfg.output.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(cmd.name(), &cfg),
    };
    match &cfg.output.path {
        Some(p) => write_file(Path::new(p), &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(method: &str, style: &str) -> RunConfig {
        RunConfig::from_json(&format!(
            r#"{{
                "schema_version": 1,
                "model": {{"r": [0.05, 0.03], "sigma": [0.3, 0.2], "gen": [[-1, 1], [1, -1]]}},
                "option": {{"style": "{style}", "T": 1, "K": 100}},
                "state": {{"s": 100}},
                "method": {method}
            }}"#
        ))
        .unwrap()
        .effective()
        .unwrap()
    }

    #[test]
    fn mc_price_row_has_std_error() {
        let t = price(&config(r#"{"mc": {"n_paths": 2000, "seed": 1}}"#, "floating_put")).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(matches!(t.rows[0][3], Cell::Num(x) if x > 0.0));
        assert_eq!(t.rows[0][4], Cell::Empty);
    }

    #[test]
    fn european_rs_needs_a_european_contract() {
        let e = price(&config(r#"{"european_rs": {}}"#, "floating_put")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let t = price(&config(r#"{"european_rs": {}}"#, "european_put")).unwrap();
        assert!(matches!(t.rows[0][1], Cell::Num(x) if x > 5.0 && x < 15.0));
    }

    #[test]
    fn price_rejects_compare_blocks() {
        let e = price(&config(r#"{"compare": {"mc": {"n_paths": 10}}}"#, "floating_put")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn diagnostics_text_lists_populated_fields() {
        let d = Diagnostics { term_norms: vec![0.5, 0.25], richardson_order: Some(2.0), ..Default::default() };
        assert_eq!(diagnostics_text(&d), "term_norms=0.5 0.25; richardson_order=2.0");
    }
}
