//! Run configuration: a single JSON document with a schema version.

use std::path::Path;

use regime_asian::european::{MuConvention, QuadratureSpec};
use regime_asian::ham::HamConfig;
use regime_asian::oracles::fd::FdConfig;
use regime_asian::oracles::mc::McConfig;
use regime_asian::{validate_model, AsianOptionSpec, MarketState, ModelParams, OptionStyle, RegimeModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelBlock,
    pub option: OptionBlock,
    pub state: StateBlock,
    pub method: MethodBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub r: Vec<f64>,
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub q: Vec<f64>,
    pub gen: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionBlock {
    pub style: OptionStyle,
    #[serde(rename = "T")]
    pub expiry: f64,
    #[serde(rename = "K", default)]
    pub strike: f64,
    #[serde(default = "unit")]
    pub multiplier: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBlock {
    #[serde(default)]
    pub t: f64,
    pub s: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub regime: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EuropeanRsMethod {
    pub quadrature: QuadratureSpec,
    pub mu_convention: MuConvention,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ham: Option<HamConfig>,
    /// One HAM row per truncation order; empty means the configured `m_trunc` only.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ham_truncations: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd: Option<FdConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub european_rs: Option<EuropeanRsMethod>,
}

/// Exactly one method per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodBlock {
    Ham(HamConfig),
    Mc(McConfig),
    Fd(FdConfig),
    EuropeanRs(EuropeanRsMethod),
    Compare(CompareBlock),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub format: Format,
    /// Report file; standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Wall-clock timings make reports differ between runs, so they are opt-in.
    pub include_timing: bool,
}

/// Validated core inputs.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: RegimeModel,
    pub spec: AsianOptionSpec,
    pub state: MarketState,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Read { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "schema_version {} unsupported, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let m = &self.model;
        let model = validate_model(&ModelParams {
            r: m.r.clone(),
            sigma: m.sigma.clone(),
            q: m.q.clone(),
            generator: m.gen.clone(),
        })?;
        let o = &self.option;
        let spec = AsianOptionSpec { style: o.style, expiry: o.expiry, strike: o.strike, multiplier: o.multiplier };
        spec.validate()?;
        let s = &self.state;
        let state = MarketState { t: s.t, spot: s.s, running_integral: s.a, regime: s.regime };
        state.validate(&spec, &model)?;
        if let MethodBlock::Compare(c) = &self.method {
            if c.ham.is_none() && c.mc.is_none() && c.fd.is_none() && c.european_rs.is_none() {
                return Err(CliError::Validation("compare needs at least one method".into()));
            }
            if !c.ham_truncations.is_empty() && c.ham.is_none() {
                return Err(CliError::Validation("ham_truncations given without a ham block".into()));
            }
            if c.ham_truncations.iter().any(|&m| m < 1) {
                return Err(CliError::Validation("ham_truncations entries must be >= 1".into()));
            }
        }
        Ok(Resolved { model, spec, state })
    }

    /// The same run with every default written out.
    pub fn effective(&self) -> CliResult<Self> {
        let r = self.resolve()?;
        let mut out = self.clone();
        out.model.q = r.model.q().to_vec();
        let expiry = r.spec.expiry;
        let y0 = r.state.ratio();
        let fill_ham = |h: &mut HamConfig| {
            let (lo, hi) = h.z_bounds(expiry);
            h.z_min = Some(lo);
            h.z_max = Some(hi);
        };
        let fill_fd = |f: &mut FdConfig| {
            f.y_max.get_or_insert(FdConfig::default_y_max(expiry, y0));
        };
        match &mut out.method {
            MethodBlock::Ham(h) => fill_ham(h),
            MethodBlock::Fd(f) => fill_fd(f),
            MethodBlock::Mc(_) | MethodBlock::EuropeanRs(_) => {}
            MethodBlock::Compare(c) => {
                if let Some(h) = c.ham.as_mut() {
                    fill_ham(h);
                    if c.ham_truncations.is_empty() {
                        c.ham_truncations.push(h.m_trunc);
                    }
                }
                if let Some(f) = c.fd.as_mut() {
                    fill_fd(f);
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// HAM settings from a `ham` method or from `compare`.
    pub fn ham(&self) -> Option<&HamConfig> {
        match &self.method {
            MethodBlock::Ham(h) => Some(h),
            MethodBlock::Compare(c) => c.ham.as_ref(),
            _ => None,
        }
    }

    /// MC settings from an `mc` method or from `compare`.
    pub fn mc(&self) -> Option<&McConfig> {
        match &self.method {
            MethodBlock::Mc(m) => Some(m),
            MethodBlock::Compare(c) => c.mc.as_ref(),
            _ => None,
        }
    }
}
