#![allow(dead_code)]

use poisson_integrators::Expr;
use rand::Rng;

/// Random polynomial of total degree ≤ `deg` in `n` variables with a
/// nonzero linear part, as an expression.
pub fn random_polynomial(rng: &mut impl Rng, n: usize, deg: u32) -> Expr {
    let mut terms = Vec::new();
    for i in 0..n {
        terms.push(Expr::var(i) * Expr::constant(rng.gen_range(0.5..1.5)));
    }
    for _ in 0..2 * n {
        let d = rng.gen_range(2..=deg.max(2));
        let mut m = Expr::constant(rng.gen_range(-1.0..1.0));
        for _ in 0..d {
            m = m * Expr::var(rng.gen_range(0..n));
        }
        terms.push(m);
    }
    Expr::sum(terms)
}

pub fn random_point(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// Central finite-difference Jacobian `J[i][j] = ∂f_i/∂x_j`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let cols: Vec<Vec<f64>> = (0..x.len())
        .map(|j| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[j] += h;
            b[j] -= h;
            let (fa, fb) = (f(&a), f(&b));
            fa.iter()
                .zip(&fb)
                .map(|(u, v)| (u - v) / (2.0 * h))
                .collect()
        })
        .collect();
    (0..cols[0].len())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

/// Least-squares slope of `log e` against `log h`.
pub fn loglog_slope(h: &[f64], e: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
