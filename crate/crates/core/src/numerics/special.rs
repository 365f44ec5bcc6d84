use std::f64::consts::FRAC_1_SQRT_2;

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `erf(b) - erf(a)` without cancellation in the tails.
pub fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 && b >= 0.0 {
        libm::erfc(a) - libm::erfc(b)
    } else if a <= 0.0 && b <= 0.0 {
        libm::erfc(-b) - libm::erfc(-a)
    } else {
        libm::erf(b) - libm::erf(a)
    }
}

/// Black–Scholes European put with continuous dividend yield.
pub fn bs_put(s: f64, k: f64, r: f64, q: f64, sigma: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return (k - s).max(0.0);
    }
    let sd = sigma * tau.sqrt();
    let d1 = ((s / k).ln() + (r - q + 0.5 * sigma * sigma) * tau) / sd;
    let d2 = d1 - sd;
    k * (-r * tau).exp() * norm_cdf(-d2) - s * (-q * tau).exp() * norm_cdf(-d1)
}

pub const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bs_put_reference() {
        // Hull's textbook value for S=K=100, r=5%, sigma=20%, T=1
        let p = bs_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0);
        assert!((p - 5.573_526_022_256_971).abs() < 1e-9);
    }

    #[test]
    fn erf_diff_tails() {
        let d = erf_diff(6.0, 7.0);
        assert!(d > 0.0 && (d - (libm::erfc(6.0) - libm::erfc(7.0))).abs() < 1e-30);
        assert!((erf_diff(-1.0, 1.0) - 2.0 * libm::erf(1.0)).abs() < 1e-15);
        assert!((INV_SQRT_PI - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-16);
    }
}
