use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ham,
    Mc,
    Fd,
    EuropeanRs,
    BlackScholes,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ham => "ham",
            Method::Mc => "mc",
            Method::Fd => "fd",
            Method::EuropeanRs => "european_rs",
            Method::BlackScholes => "black_scholes",
        }
    }
}

/// Method-specific convergence information attached to a price.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// HAM: `max |V_i^m| / m!` over both regimes, one entry per term.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub term_norms: Vec<f64>,
    /// HAM: assembled price after each added term.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub partial_prices: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub richardson_order: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceResult {
    pub price: f64,
    pub method: Method,
    pub error_estimate: f64,
    pub diagnostics: Diagnostics,
}
