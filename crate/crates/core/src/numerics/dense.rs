//! Small dense matrix helpers for generator exponentials.

pub type Matrix = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b[0].len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for (k, bk) in b.iter().enumerate() {
            let aik = a[i][k];
            for j in 0..m {
                c[i][j] += aik * bk[j];
            }
        }
    }
    c
}

pub fn matvec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// `exp(t A)` by scaling and squaring with a Taylor core.
pub fn expm(a: &Matrix, t: f64) -> Matrix {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max) * t.abs();
    let mut squarings = 0;
    let mut scale = t;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as i32;
        scale = t / 2f64.powi(squarings);
    }
    let scaled: Matrix = a.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=20 {
        term = matmul(&term, &scaled);
        let inv = 1.0 / k as f64;
        for row in term.iter_mut() {
            row.iter_mut().for_each(|x| *x *= inv);
        }
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_generator_exponential() {
        // P(t) for rates a, b: p11 = (b + a e^{-(a+b)t}) / (a+b)
        let (a, b, t) = (1.5, 0.5, 2.0);
        let g = vec![vec![-a, a], vec![b, -b]];
        let p = expm(&g, t);
        let p11 = (b + a * (-(a + b) * t).exp()) / (a + b);
        assert!((p[0][0] - p11).abs() < 1e-13);
        assert!((p[0][0] + p[0][1] - 1.0).abs() < 1e-13);
    }
}
