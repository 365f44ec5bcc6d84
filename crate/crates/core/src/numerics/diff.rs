//! Finite-difference derivatives of data on uniform grids.

/// First derivative of uniformly spaced samples: fourth-order central
/// differences in the interior, fourth-order one-sided stencils at the edges.
pub fn first_derivative_4th(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let v = values;
    let mut out = vec![0.0; n];
    if n < 5 {
        // fall back to second order
        for i in 0..n {
            out[i] = match (i, n) {
                (_, 1) => 0.0,
                (0, _) => (v[1] - v[0]) / h,
                (i, n) if i == n - 1 => (v[n - 1] - v[n - 2]) / h,
                _ => (v[i + 1] - v[i - 1]) / (2.0 * h),
            };
        }
        return out;
    }
    for i in 2..n - 2 {
        out[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
    }
    out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
    out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h);
    out[n - 2] = (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]) / (12.0 * h);
    out[n - 1] =
        (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5]) / (12.0 * h);
    out
}

/// Fourth-order central first derivative at interior index `i` (needs `2 <= i < n-2`).
pub fn central_first_4th(v: &[f64], i: usize, h: f64) -> f64 {
    (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h)
}

/// Fourth-order central second derivative at interior index `i` (needs `2 <= i < n-2`).
pub fn central_second_4th(v: &[f64], i: usize, h: f64) -> f64 {
    (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quartics() {
        let h = 0.1;
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * h).collect();
        let v: Vec<f64> = xs.iter().map(|x| x.powi(4) - 2.0 * x * x + x).collect();
        let d = first_derivative_4th(&v, h);
        for (x, dv) in xs.iter().zip(&d) {
            let exact = 4.0 * x.powi(3) - 4.0 * x + 1.0;
            assert!((dv - exact).abs() < 1e-10, "x={x} {dv} vs {exact}");
        }
        let d2 = central_second_4th(&v, 5, h);
        assert!((d2 - (12.0 * xs[5] * xs[5] - 4.0)).abs() < 1e-9);
    }
}
