//! Crank–Nicolson European put under regime switching, in log-spot.
//!
//! Used where the closed form does not apply (equal volatilities with
//! distinct rates) and as an independent check of it.

use crate::error::{PricingError, Result};
use crate::model::RegimeModel;
use crate::numerics::banded::BandedMatrix;
use crate::numerics::dense::{expm, matvec, Matrix};
use crate::numerics::interp::Pchip;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuropeanFdConfig {
    pub n_x: usize,
    pub n_t: usize,
    /// Half-width of the log-spot grid in units of `sigma_max sqrt(T)`.
    pub width_sd: f64,
}

impl Default for EuropeanFdConfig {
    fn default() -> Self {
        Self { n_x: 2000, n_t: 1000, width_sd: 8.0 }
    }
}

/// Put value in regime `regime` with time to maturity `tau`.
pub fn price_european_put_fd(
    model: &RegimeModel,
    spot: f64,
    strike: f64,
    tau: f64,
    regime: usize,
    cfg: &EuropeanFdConfig,
) -> Result<f64> {
    if !(spot > 0.0 && strike > 0.0 && tau > 0.0) {
        return Err(PricingError::Domain("spot, strike and tau must be > 0".into()));
    }
    if cfg.n_x < 8 || cfg.n_t < 4 {
        return Err(PricingError::InvalidConfig("european fd grid too small".into()));
    }
    let ns = model.n_states();
    let smax = model.sigma().iter().cloned().fold(0.0, f64::max);
    let x0 = strike.ln();
    let xs = spot.ln();
    let w = (cfg.width_sd * smax * tau.sqrt()).max((xs - x0).abs() + 4.0 * smax * tau.sqrt());
    let n = cfg.n_x + cfg.n_x % 2;
    let h = 2.0 * w / n as f64;
    let x: Vec<f64> = (0..=n).map(|j| x0 - w + j as f64 * h).collect();
    let np = x.len();
    let dt = tau / cfg.n_t as f64;
    let gen = model.generator().to_vec();

    // boundary discount factors d_i(u) = E_i[e^{-int r}], e_i(u) = E_i[e^{-int q}]
    let shift = |v: &[f64]| -> Matrix {
        (0..ns).map(|i| (0..ns).map(|k| gen[i][k] - if i == k { v[i] } else { 0.0 }).collect()).collect()
    };
    let d_step = expm(&shift(model.r()), dt);
    let e_step = expm(&shift(model.q()), dt);
    let d_half = expm(&shift(model.r()), 0.5 * dt);
    let e_half = expm(&shift(model.q()), 0.5 * dt);
    let mut dfac = vec![1.0; ns];
    let mut efac = vec![1.0; ns];

    let coef = |i: usize| {
        let s2 = model.sigma()[i].powi(2);
        let mu = model.r()[i] - model.q()[i] - 0.5 * s2;
        let a = 0.5 * s2 / (h * h);
        (a - 0.5 * mu / h, -2.0 * a - model.r()[i], a + 0.5 * mu / h)
    };
    let build = |c: f64| -> Result<BandedMatrix> {
        let bw = 2 * ns - 1;
        let mut m = BandedMatrix::zeros(ns * np, bw, bw);
        for j in 0..np {
            for i in 0..ns {
                let row = j * ns + i;
                m.add(row, row, 1.0);
                if j == 0 || j == np - 1 {
                    continue;
                }
                let (lo, mid, hi) = coef(i);
                m.add(row, row - ns, -c * lo);
                m.add(row, row, -c * mid);
                m.add(row, row + ns, -c * hi);
                for k in 0..ns {
                    m.add(row, j * ns + k, -c * gen[i][k]);
                }
            }
        }
        m.factor()?;
        Ok(m)
    };
    let implicit = build(0.5 * dt)?;
    let mut v: Vec<f64> = vec![0.0; ns * np];
    for j in 0..np {
        for i in 0..ns {
            v[j * ns + i] = (strike - x[j].exp()).max(0.0);
        }
    }
    let set_bounds = |v: &mut [f64], d: &[f64], e: &[f64]| {
        for i in 0..ns {
            v[i] = (strike * d[i] - x[0].exp() * e[i]).max(0.0);
            v[(np - 1) * ns + i] = 0.0;
        }
    };
    let ran = 2usize.min(cfg.n_t);
    for step in 0..cfg.n_t {
        if step < ran {
            for _ in 0..2 {
                dfac = matvec(&d_half, &dfac);
                efac = matvec(&e_half, &efac);
                set_bounds(&mut v, &dfac, &efac);
                implicit.solve(&mut v);
            }
            continue;
        }
        let mut b = v.clone();
        for j in 1..np - 1 {
            for i in 0..ns {
                let (lo, mid, hi) = coef(i);
                let row = j * ns + i;
                let mut lv = lo * v[row - ns] + mid * v[row] + hi * v[row + ns];
                for k in 0..ns {
                    lv += gen[i][k] * v[j * ns + k];
                }
                b[row] = v[row] + 0.5 * dt * lv;
            }
        }
        dfac = matvec(&d_step, &dfac);
        efac = matvec(&e_step, &efac);
        set_bounds(&mut b, &dfac, &efac);
        implicit.solve(&mut b);
        v = b;
    }
    let vals: Vec<f64> = (0..np).map(|j| v[j * ns + regime]).collect();
    Pchip::new(x, vals)?.eval(xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::bs_put;

    #[test]
    fn single_regime_matches_black_scholes() {
        let m = RegimeModel::new(vec![0.05], vec![0.2], vec![vec![0.0]]).unwrap();
        for s in [80.0, 100.0, 125.0] {
            let p = price_european_put_fd(&m, s, 100.0, 1.0, 0, &EuropeanFdConfig::default()).unwrap();
            let bs = bs_put(s, 100.0, 0.05, 0.0, 0.2, 1.0);
            assert!((p - bs).abs() < 2e-3, "{s}: {p} vs {bs}");
        }
    }
}
