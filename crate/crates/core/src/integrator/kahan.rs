use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Kahan step for `ẋ_i = x_i Σ_j s_ij x_j` with `s_ij = sign(j − i)`, the
/// Hamiltonian field of `H = Σ x_i` for `{x_i, x_j} = x_i x_j` (`i < j`).
///
/// Solves the linear system `x'_i − x_i = Δt (x_i σ_i(x') + x'_i σ_i(x))`
/// with `σ_i(y) = Σ_j s_ij y_j`. `H` is conserved exactly.
pub fn kahan_lv_step(dt: f64, x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if dt == 0.0 {
        return Ok(x.to_vec());
    }
    let s = |i: usize, j: usize| match i.cmp(&j) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Greater => -1.0,
    };
    let sigma: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| s(i, j) * x[j]).sum())
        .collect();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { 1.0 - dt * sigma[i] } else { 0.0 };
        diag - dt * x[i] * s(i, j)
    });
    let out = m
        .lu()
        .solve(&DVector::from_column_slice(x))
        .ok_or_else(|| Error::Singular(format!("Kahan system at dt = {dt}")))?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("Kahan system at dt = {dt}")));
    }
    Ok(out.iter().copied().collect())
}

/// `f(t, u) = (e^{ut} − 1) / (u (e^{ut} + 1)) = tanh(ut/2) / u`, with
/// `f(t, 0) = t/2`. A Kahan step of size `f(t, H(x))` is the `H`-flow for time `t`.
pub fn lv_time_reparam(t: f64, u: f64) -> f64 {
    let z = u * t / 2.0;
    if z.abs() < 1e-8 {
        t / 2.0 * (1.0 - z * z / 3.0)
    } else {
        z.tanh() / u
    }
}

/// Inverse of [`lv_time_reparam`] in `t`: the `H`-flow time covered by a
/// Kahan step of size `dt`, `2 artanh(u dt) / u`. Requires `|u dt| < 1`.
pub fn kahan_flow_time(dt: f64, u: f64) -> Result<f64> {
    let z = u * dt;
    if !(z.abs() < 1.0) {
        return Err(Error::domain(format!(
            "Kahan step {dt} beyond the reparametrisation range for H = {u}"
        )));
    }
    Ok(if z.abs() < 1e-8 {
        2.0 * dt * (1.0 + z * z / 3.0)
    } else {
        2.0 * z.atanh() / u
    })
}

/// `e^{Δt^k} R(Δt) x`: a leaf-preserving but non-Hamiltonian scheme for
/// `H = (x² + y²)/2` under the counterexample structure.
pub fn counterexample_step(dt: f64, k: u32, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: x.len(),
        });
    }
    let g = dt.powi(k as i32).exp();
    let (s, c) = dt.sin_cos();
    Ok(vec![g * (c * x[0] - s * x[1]), g * (s * x[0] + c * x[1])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_two_dimensional_by_hand() {
        // [1 - dt x2, -dt x1; dt x2, 1 + dt x1] x' = x, solved by Cramer's rule
        let (dt, x1, x2) = (0.1, 1.0, 1.0);
        let (a, b, c, d) = (1.0 - dt * x2, -dt * x1, dt * x2, 1.0 + dt * x1);
        let det = a * d - b * c;
        let want = [(d * x1 - b * x2) / det, (a * x2 - c * x1) / det];
        let got = kahan_lv_step(dt, &[x1, x2]).unwrap();
        assert!((got[0] - want[0]).abs() < 1e-15 && (got[1] - want[1]).abs() < 1e-15);
        assert!((got.iter().sum::<f64>() - 2.0).abs() < 1e-15);
        assert_eq!(kahan_lv_step(0.0, &[0.3, 0.2]).unwrap(), vec![0.3, 0.2]);
    }

    #[test]
    fn reparam_limits_and_inverse() {
        assert_eq!(lv_time_reparam(0.4, 0.0), 0.2);
        assert!((lv_time_reparam(0.4, 1e-12) - 0.2).abs() < 1e-15);
        let u = 2.3;
        let dt = lv_time_reparam(0.37, u);
        assert!((kahan_flow_time(dt, u).unwrap() - 0.37).abs() < 1e-14);
        assert!(kahan_flow_time(1.0, 1.0).is_err());
    }

    #[test]
    fn counterexample_single_step() {
        let y = counterexample_step(0.1, 2, &[1.0, 0.0]).unwrap();
        let g = 0.01f64.exp();
        assert!((y[0] - g * 0.1f64.cos()).abs() < 1e-15);
        assert!((y[1] - g * 0.1f64.sin()).abs() < 1e-15);
    }
}
