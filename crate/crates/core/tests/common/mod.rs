//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64 as C;

/// `exp(A)` for a complex 2x2 matrix via `e^m [cosh d I + sinh d / d (A - m I)]`.
pub fn expm2(a: [[C; 2]; 2]) -> [[C; 2]; 2] {
    let m = (a[0][0] + a[1][1]) * 0.5;
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let d = (m * m - det).sqrt();
    let sh = if d.norm() < 1e-8 { C::new(1.0, 0.0) + d * d / 6.0 } else { d.sinh() / d };
    let b = [[a[0][0] - m, a[0][1]], [a[1][0], a[1][1] - m]];
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { d.cosh() } else { C::new(0.0, 0.0) };
            out[i][j] = m.exp() * (id + sh * b[i][j]);
        }
    }
    out
}

/// Put in regime `i` by Fourier inversion of the discounted log-return
/// transform, exact for regime-dependent rates.
#[allow(clippy::too_many_arguments)]
pub fn fourier_put(r: [f64; 2], sig: [f64; 2], a12: f64, a21: f64, s: f64, k: f64, tau: f64, i: usize) -> f64 {
    let g = [[-a12, a12], [a21, -a21]];
    // psi_i(v) = E_i[exp(-int r) exp(i v ln(S_T/S))] at v = u - i/2
    let psi = |u: f64| -> C {
        let v = C::new(u, -0.5);
        let iv = C::i() * v;
        let mut a = [[C::new(0.0, 0.0); 2]; 2];
        for p in 0..2 {
            for q in 0..2 {
                let mut e = C::new(g[p][q], 0.0);
                if p == q {
                    let drift = r[p] - 0.5 * sig[p] * sig[p];
                    e += iv * drift - v * v * (0.5 * sig[p] * sig[p]) - r[p];
                }
                a[p][q] = e * tau;
            }
        }
        let m = expm2(a);
        m[i][0] + m[i][1]
    };
    let x = (s / k).ln();
    let f = |u: f64| -> f64 { (C::new(0.0, u * x).exp() * psi(u)).re / (u * u + 0.25) };
    let umax = 40.0 / (sig[0].min(sig[1]) * tau.sqrt());
    let n = (umax / 0.5).ceil() as usize;
    let (xs, ws) = gl10();
    let mut acc = 0.0;
    for p in 0..n {
        let a = p as f64 * 0.5;
        for (t, w) in xs.iter().zip(&ws) {
            acc += 0.25 * w * f(a + 0.25 * (t + 1.0));
        }
    }
    let call = s - (s * k).sqrt() / std::f64::consts::PI * acc;
    let mut gd = [[C::new(0.0, 0.0); 2]; 2];
    for p in 0..2 {
        for q in 0..2 {
            gd[p][q] = C::new((g[p][q] - if p == q { r[p] } else { 0.0 }) * tau, 0.0);
        }
    }
    let d = expm2(gd);
    let bond = d[i][0].re + d[i][1].re;
    call - s + k * bond
}

fn gl10() -> ([f64; 10], [f64; 10]) {
    let x = [
        -0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472, -0.1488743389816312,
        0.1488743389816312, 0.4333953941292472, 0.6794095682990244, 0.8650633666889845, 0.9739065285171717,
    ];
    let w = [
        0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963, 0.2955242247147529,
        0.2955242247147529, 0.2692667193099963, 0.2190863625159820, 0.1494513491505806, 0.0666713443086881,
    ];
    (x, w)
}
