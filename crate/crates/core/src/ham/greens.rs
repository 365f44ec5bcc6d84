//! Half-line heat kernel with a Robin condition at `z = 0`.
//!
//! `G = K(z - xi) + K(z + xi) + c e^{E} erfc((z + xi) / (2 sqrt(tau)) - c sqrt(tau))`
//! with `K(x) = e^{-x^2 / 4 tau} / sqrt(4 pi tau)` and `c = (1 - gamma) / 2`.
//! Dimensional consistency needs `E = c^2 tau - c (z + xi)`; the variant
//! without the `tau` factor is kept for comparison.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::numerics::special::{erfc, INV_SQRT_PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreensVariant {
    /// Exponent `(1 - gamma)^2 tau / 4 - (1 - gamma)(z + xi) / 2`.
    #[default]
    WithTau,
    /// Exponent `(1 - gamma)^2 / 4 - (1 - gamma)(z + xi) / 2`.
    Printed,
}

impl GreensVariant {
    pub const ALL: [GreensVariant; 2] = [GreensVariant::WithTau, GreensVariant::Printed];

    /// Exponent of the Robin term at `c = (1 - gamma) / 2`.
    pub fn robin_exponent(self, c: f64, tau: f64, sum: f64) -> f64 {
        match self {
            GreensVariant::WithTau => c * c * tau - c * sum,
            GreensVariant::Printed => c * c - c * sum,
        }
    }
}

pub fn greens_function(tau: f64, z: f64, xi: f64, gamma: f64, variant: GreensVariant) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(PricingError::Domain(format!("tau = {tau} must be > 0")));
    }
    let c = 0.5 * (1.0 - gamma);
    let norm = 0.5 * INV_SQRT_PI / tau.sqrt();
    let direct = norm * (-(z - xi).powi(2) / (4.0 * tau)).exp();
    let image = norm * (-(z + xi).powi(2) / (4.0 * tau)).exp();
    let robin = if c == 0.0 {
        0.0
    } else {
        let sum = z + xi;
        c * variant.robin_exponent(c, tau, sum).exp() * erfc(sum / (2.0 * tau.sqrt()) - c * tau.sqrt())
    };
    Ok(direct + image + robin)
}

/// `|G_tau - G_zz|` by fourth-order central differences.
pub fn heat_residual(tau: f64, z: f64, xi: f64, gamma: f64, variant: GreensVariant) -> Result<f64> {
    let g = |t: f64, x: f64| greens_function(t, x, xi, gamma, variant);
    let dt = 1e-3 * tau;
    let dz = 1e-3 * tau.sqrt().max(1e-2);
    let g_t = (-g(tau + 2.0 * dt, z)? + 8.0 * g(tau + dt, z)? - 8.0 * g(tau - dt, z)? + g(tau - 2.0 * dt, z)?)
        / (12.0 * dt);
    let g_zz = (-g(tau, z + 2.0 * dz)? + 16.0 * g(tau, z + dz)? - 30.0 * g(tau, z)? + 16.0 * g(tau, z - dz)?
        - g(tau, z - 2.0 * dz)?)
        / (12.0 * dz * dz);
    Ok((g_t - g_zz).abs())
}

/// Largest heat residual of `variant` over a sample set of `(tau, z, xi, gamma)`.
pub fn max_heat_residual(variant: GreensVariant, samples: &[(f64, f64, f64, f64)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(tau, z, xi, gamma) in samples {
        worst = worst.max(heat_residual(tau, z, xi, gamma, variant)?);
    }
    Ok(worst)
}

/// The default residual sample: `gamma in {0.5, 1, 2.5}`, `tau in {0.01, 0.1}`,
/// and a spread of `(z, xi)` in the half-line interior.
pub fn residual_samples() -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for gamma in [0.5, 1.0, 2.5] {
        for tau in [0.01, 0.1] {
            for (z, xi) in [(0.3, 0.2), (0.5, 0.7), (1.0, 0.1), (0.2, 1.5), (0.05, 0.05), (2.0, 1.8)] {
                out.push((tau, z, xi, gamma));
            }
        }
    }
    out
}

/// Picks the variant whose heat residual is below `tol` on `samples`,
/// preferring the one with the smaller residual.
pub fn select_variant(samples: &[(f64, f64, f64, f64)], tol: f64) -> Result<(GreensVariant, f64)> {
    let mut best: Option<(GreensVariant, f64)> = None;
    for v in GreensVariant::ALL {
        let r = max_heat_residual(v, samples)?;
        if r < tol && best.is_none_or(|(_, b)| r < b) {
            best = Some((v, r));
        }
    }
    best.ok_or_else(|| PricingError::NotApplicable("no Green's function variant passes the heat residual check".into()))
}

/// `|int G(tau, z, xi) phi(xi) dxi - phi(z)|` for `phi` supported in `support`.
pub fn delta_error(
    phi: &dyn Fn(f64) -> f64,
    support: (f64, f64),
    tau: f64,
    z: f64,
    gamma: f64,
    variant: GreensVariant,
) -> Result<f64> {
    let gl = crate::numerics::gauss::GaussLegendre::new(48);
    let cells = 80;
    let w = (support.1 - support.0) / cells as f64;
    let mut acc = 0.0;
    for k in 0..cells {
        let a = support.0 + k as f64 * w;
        let mut err = None;
        acc += gl.integrate(a, a + w, |x| match greens_function(tau, z, x, gamma, variant) {
            Ok(g) => g * phi(x),
            Err(e) => {
                err = Some(e);
                0.0
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok((acc - phi(z)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gauss::GaussLegendre;

    #[test]
    fn unit_gamma_drops_erfc_term() {
        for (z, xi) in [(0.3, 0.5), (1.0, 0.0)] {
            let tau = 0.05;
            let g = greens_function(tau, z, xi, 1.0, GreensVariant::WithTau).unwrap();
            let k = |x: f64| (-x * x / (4.0 * tau)).exp() / (4.0 * std::f64::consts::PI * tau).sqrt();
            assert!((g - k(z - xi) - k(z + xi)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_nonpositive_tau() {
        assert!(greens_function(0.0, 0.1, 0.1, 1.0, GreensVariant::WithTau).is_err());
    }

    #[test]
    fn only_the_tau_variant_solves_the_heat_equation() {
        let s = residual_samples();
        assert!(max_heat_residual(GreensVariant::WithTau, &s).unwrap() < 1e-6);
        assert!(max_heat_residual(GreensVariant::Printed, &s).unwrap() > 1e-3);
        assert_eq!(select_variant(&s, 1e-6).unwrap().0, GreensVariant::WithTau);
    }

    #[test]
    fn robin_condition_holds() {
        // G_z + (1 - gamma)/2 G = 0 at z = 0
        let (tau, xi, gamma) = (0.05, 0.4, 2.5);
        let h = 1e-5;
        let g = |z: f64| greens_function(tau, z, xi, gamma, GreensVariant::WithTau).unwrap();
        let gz = (-g(2.0 * h) + 4.0 * g(h) - 3.0 * g(0.0)) / (2.0 * h);
        assert!((gz + 0.5 * (1.0 - gamma) * g(0.0)).abs() < 1e-6);
    }

    #[test]
    fn delta_property_error_is_first_order() {
        let gl = GaussLegendre::new(64);
        let phi = |x: f64| if x > 0.5 && x < 2.5 { ((x - 0.5) * (2.5 - x)).powi(3) } else { 0.0 };
        let conv = |tau: f64, z: f64| -> f64 {
            let mut acc = 0.0;
            for k in 0..40 {
                let a = 0.5 + k as f64 * 0.05;
                acc += gl.integrate(a, a + 0.05, |x| greens_function(tau, z, x, 0.5, GreensVariant::WithTau).unwrap() * phi(x));
            }
            acc
        };
        let z = 1.3;
        let e1 = (conv(1e-3, z) - phi(z)).abs();
        let e2 = (conv(5e-4, z) - phi(z)).abs();
        assert!(e1 < 1e-2);
        let ratio = e1 / e2;
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }
}
