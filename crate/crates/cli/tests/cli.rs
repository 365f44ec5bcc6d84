use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MODEL: &str = r#""model": {"r": [0.05, 0.03], "sigma": [0.3, 0.2], "gen": [[-1.0, 1.0], [1.0, -1.0]]}"#;
const PUT: &str = r#"{"style": "floating_put", "T": 1.0}"#;
const HAM: &str = r#"{"n_z": 161, "n_u": 21, "m_trunc": 4}"#;

fn config(dir: &Path, name: &str, state: &str, method: &str, format: &str) -> PathBuf {
    let out = dir.join(format!("{name}.out"));
    let text = format!(
        r#"{{"schema_version": 1, {MODEL}, "option": {PUT}, "state": {state}, "method": {method},
            "output": {{"format": "{format}", "path": {:?}}}}}"#,
        out.display().to_string()
    );
    let p = dir.join(format!("{name}.json"));
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], cfg: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regime-asian")).args(args).arg("--config").arg(cfg).output().unwrap()
}

fn report(cfg: &Path) -> String {
    std::fs::read_to_string(cfg.with_extension("out")).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

const INCEPTION: &str = r#"{"s": 100.0}"#;

#[test]
fn mc_price_writes_one_row_with_std_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "mc", INCEPTION, r#"{"mc": {"n_paths": 5000, "seed": 1}}"#, "csv");
    let out = run(&["price"], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = report(&cfg);
    assert!(text.starts_with("method,price,error_estimate,std_error,runtime_ms,diagnostics\n"));
    assert!(!text.contains('\r'));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    assert!(rows[0][3].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn invalid_generator_exits_2_and_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bad", INCEPTION, r#"{"mc": {"n_paths": 10}}"#, "csv");
    let text = std::fs::read_to_string(&cfg).unwrap().replace("[1.0, -1.0]", "[1.0, -0.5]");
    std::fs::write(&cfg, text).unwrap();
    let out = run(&["price"], &cfg);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("generator row 1"));
}

#[test]
fn schema_errors_exit_2_with_the_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "schema", r#"{"s": 100.0, "regim": 1}"#, r#"{"mc": {}}"#, "csv");
    let out = run(&["price"], &cfg);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`state"), "{err}");
    assert!(err.contains("regim"), "{err}");
}

#[test]
fn states_outside_the_series_grid_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "far", r#"{"t": 0.5, "s": 100.0, "a": 0.0001}"#, &format!(r#"{{"ham": {HAM}}}"#), "csv");
    let out = run(&["price"], &cfg);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn emitted_config_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "first", INCEPTION, r#"{"compare": {"fd": {"n_y": 64, "n_t": 64}, "mc": {"n_paths": 4000}}}"#, "json");
    let emitted = dir.path().join("effective.json");
    let out = run(&["compare", "--emit-config", emitted.to_str().unwrap()], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&emitted).unwrap();
    assert!(text.contains("\"y_max\"") && text.contains("\"seed\"") && text.contains("\"batch_size\""));
    let first = report(&cfg);
    let again = run(&["compare"], &emitted);
    assert!(again.status.success());
    assert_eq!(report(&cfg), first);
}

#[test]
fn compare_reports_decreasing_term_norms_after_the_guess() {
    let dir = tempfile::tempdir().unwrap();
    let method = format!(r#"{{"compare": {{"ham": {HAM}, "ham_truncations": [1, 2, 3, 4]}}}}"#);
    let cfg = config(dir.path(), "cmp", r#"{"t": 0.5, "s": 100.0, "a": 50.0}"#, &method, "csv");
    assert!(run(&["compare"], &cfg).status.success());
    let text = report(&cfg);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let norms: Vec<f64> = rows[3]
        .split("term_norms=")
        .nth(1)
        .unwrap()
        .split(';')
        .next()
        .unwrap()
        .split(' ')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(norms.len(), 5);
    assert!(norms[1..].windows(2).all(|w| w[1] < w[0]), "{norms:?}");
    assert!(rows[0].starts_with("ham(m_trunc=1),"));
}

#[test]
fn convergence_covers_both_guesses_and_starts_from_zero() {
    let dir = tempfile::tempdir().unwrap();
    let method = r#"{"ham": {"n_z": 161, "n_u": 21, "m_trunc": 4, "terminal_mode": "literal_zero"}}"#;
    let cfg = config(dir.path(), "conv", r#"{"t": 0.5, "s": 100.0, "a": 50.0}"#, method, "csv");
    assert!(run(&["convergence"], &cfg).status.success());
    let rows = csv_rows(&report(&cfg));
    assert_eq!(rows.len(), 10);
    let zero: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "zero").collect();
    assert_eq!(zero[0][1], "0");
    assert_eq!(zero[0][2].parse::<f64>().unwrap(), 0.0);
    for r in &rows {
        if r[1] != "0" {
            assert!(r[3].parse::<f64>().unwrap().is_finite());
        }
    }
}

#[test]
fn thread_cap_must_be_a_positive_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "t", INCEPTION, r#"{"mc": {"n_paths": 10}}"#, "csv");
    let out = Command::new(env!("CARGO_BIN_EXE_regime-asian"))
        .args(["price", "--config"])
        .arg(&cfg)
        .env("PRICER_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
