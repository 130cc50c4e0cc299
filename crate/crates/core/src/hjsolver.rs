//! Truncated generating functions `S_t = Σ_{j=1..k} t^j S_j` of the
//! Hamilton-Jacobi equation `∂_t S_t(m) = H(α(m, ∇S_t(m)))`, `S_0 = 0`.
//!
//! The coefficients satisfy `S_1 = H` and
//! `S_{i+1}(m) = [t^i] H(α(m, Σ_{j≤i} t^j ∇S_j(m))) / (i + 1)`.
//! They are never expanded symbolically: at a point `m` the recursion runs
//! bottom-up on local Taylor expansions, `S_j` being carried to degree
//! `d + k − j` so that the top coefficient still has degree `d`.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::birealisation::BiRealisation;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::integrator::NewtonReport;
use crate::jetcalc::{MultiJet, Scalar, TJet};

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingFunction {
    pub order: usize,
    pub bireal: BiRealisation,
    pub hamiltonian: Expr,
}

/// `t^j · a` as a jet of the given order (constants broadcast).
fn shift<T: Scalar>(a: &TJet<T>, j: usize, order: usize) -> TJet<T> {
    let coeffs = (0..=order)
        .map(|i| if i >= j { a.coeff(i - j) } else { T::zero() })
        .collect();
    TJet::new(coeffs)
}

/// Solution of `α(x̄, ∇S_t(x̄)) = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSolution {
    pub xbar: Vec<f64>,
    pub covector: Vec<f64>,
    pub report: NewtonReport,
}

impl GeneratingFunction {
    pub fn dim(&self) -> usize {
        self.bireal.dim()
    }

    /// Local Taylor expansions of `S_1..S_k` at `x0`, each of degree at least
    /// `degree` (`S_j` has degree `degree + k − j`).
    pub fn coefficients_at(&self, x0: &[f64], degree: usize) -> Result<Vec<MultiJet<f64>>> {
        let n = self.dim();
        if x0.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: x0.len(),
            });
        }
        let k = self.order;
        let top = degree + k - 1;
        let mut s = vec![self.hamiltonian.eval(&MultiJet::variables(x0, top))?];
        let mut grads: Vec<Vec<MultiJet<f64>>> = vec![s[0].grad_jets(n)];
        for i in 1..k {
            let d = top - i;
            let m: Vec<TJet<MultiJet<f64>>> = MultiJet::variables(x0, d)
                .into_iter()
                .map(|v| TJet::constant_of(v, i))
                .collect();
            let p: Vec<TJet<MultiJet<f64>>> = (0..n)
                .map(|c| {
                    let mut coeffs = vec![MultiJet::zero(); i + 1];
                    for (j, g) in grads.iter().enumerate() {
                        coeffs[j + 1] = g[c].truncate(d);
                    }
                    TJet::new(coeffs)
                })
                .collect();
            let a = self.bireal.alpha(&m, &p)?;
            let h = self.hamiltonian.eval(&a)?;
            let next = h.coeff(i).scale(1.0 / (i + 1) as f64);
            grads.push(next.grad_jets(n));
            s.push(next);
        }
        Ok(s)
    }

    /// `S_t(m) = Σ t^j S_j(m)`.
    pub fn eval_s(&self, t: f64, m: &[f64]) -> Result<f64> {
        let s = self.coefficients_at(m, 0)?;
        Ok(poly(t, s.iter().map(|c| c.value())))
    }

    /// `∇S_t(m)`.
    pub fn grad_s(&self, t: f64, m: &[f64]) -> Result<Vec<f64>> {
        let s = self.coefficients_at(m, 1)?;
        Ok(self.combine_gradients(t, &s))
    }

    fn combine_gradients(&self, t: f64, s: &[MultiJet<f64>]) -> Vec<f64> {
        let n = self.dim();
        let mut g = vec![0.0; n];
        let mut tj = 1.0;
        for sj in s {
            tj *= t;
            for (gi, v) in g.iter_mut().zip(sj.gradient(n)) {
                *gi += tj * v;
            }
        }
        g
    }

    /// `S_t` expanded at `m` to the given degree, as a single jet.
    pub fn s_jet(&self, t: f64, m: &[f64], degree: usize) -> Result<MultiJet<f64>> {
        let s = self.coefficients_at(m, degree)?;
        let mut acc = MultiJet::zeros(self.dim(), degree);
        let mut tj = 1.0;
        for sj in &s {
            tj *= t;
            acc = acc + sj.scale(tj);
        }
        Ok(acc)
    }

    /// `∂_t S_t(m) − H(α(m, ∇S_t(m)))`; of order `t^k` for a truncation of order `k`.
    pub fn hj_residual(&self, t: f64, m: &[f64]) -> Result<f64> {
        let s = self.coefficients_at(m, 1)?;
        let dt: f64 = s
            .iter()
            .enumerate()
            .map(|(j, sj)| (j + 1) as f64 * t.powi(j as i32) * sj.value())
            .sum();
        let p = self.combine_gradients(t, &s);
        let a = self.bireal.alpha(m, &p)?;
        Ok(dt - self.hamiltonian.eval(&a)?)
    }

    /// Newton solve of `α(x̄, ∇S_t(x̄)) = x` from `x̄₀ = x`.
    pub fn solve_source(
        &self,
        t: f64,
        x: &[f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<SourceSolution> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: x.len(),
            });
        }
        let diverged = |iterations: usize, residual: f64, reason: String| Error::NewtonDiverged {
            iterations,
            residual,
            reason,
        };
        let mut xbar = x.to_vec();
        let mut residual = f64::INFINITY;
        for it in 0..=max_iter {
            let (f, j, p) = match self.source_residual(t, &xbar, x) {
                Ok(v) => v,
                Err(e) if e.is_numerical() => return Err(diverged(it, residual, e.to_string())),
                Err(e) => return Err(e),
            };
            residual = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !residual.is_finite() {
                return Err(diverged(it, residual, "non-finite residual".into()));
            }
            if residual <= tol {
                let done = SourceSolution {
                    xbar,
                    covector: p,
                    report: NewtonReport {
                        iterations: it,
                        residual,
                    },
                };
                return Ok(self.polish(t, x, &j, &f, done));
            }
            if it == max_iter {
                break;
            }
            let dx = newton_update(&j, &f)
                .ok_or_else(|| diverged(it, residual, "singular Newton Jacobian".into()))?;
            for (xi, d) in xbar.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        Err(diverged(
            max_iter,
            residual,
            format!("residual above tolerance {tol:e}"),
        ))
    }

    /// One extra Newton step after convergence, kept only if it lowers the
    /// residual. Accumulated residuals drift off the symplectic leaf over long
    /// runs, so accepted iterates are pushed to rounding level.
    fn polish(
        &self,
        t: f64,
        x: &[f64],
        j: &[Vec<f64>],
        f: &[f64],
        sol: SourceSolution,
    ) -> SourceSolution {
        if sol.report.residual == 0.0 {
            return sol;
        }
        let Some(dx) = newton_update(j, f) else {
            return sol;
        };
        let xbar: Vec<f64> = sol.xbar.iter().zip(dx).map(|(a, d)| a + d).collect();
        match self.source_residual(t, &xbar, x) {
            Ok((f2, _, p)) => {
                let residual = f2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if residual < sol.report.residual {
                    SourceSolution {
                        xbar,
                        covector: p,
                        report: NewtonReport {
                            iterations: sol.report.iterations + 1,
                            residual,
                        },
                    }
                } else {
                    sol
                }
            }
            Err(_) => sol,
        }
    }

    /// `F(x̄) = α(x̄, ∇S_t(x̄)) − x`, its Jacobian `∂α/∂x + ∂α/∂p · Hess S_t`, and
    /// the covector `∇S_t(x̄)`.
    #[allow(clippy::type_complexity)]
    fn source_residual(
        &self,
        t: f64,
        xbar: &[f64],
        x: &[f64],
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
        let n = self.dim();
        let s = self.s_jet(t, xbar, 2)?;
        let p: Vec<MultiJet<f64>> = s.grad_jets(n).into_iter().map(|g| g.truncate(1)).collect();
        let m = MultiJet::variables(xbar, 1);
        let a = self.bireal.alpha(&m, &p)?;
        let f = a.iter().zip(x).map(|(ai, xi)| ai.value() - xi).collect();
        let j = a.iter().map(|ai| ai.gradient(n)).collect();
        Ok((f, j, p.iter().map(|pi| pi.value()).collect()))
    }

    /// `h_t(x) = ∂_t S_t(x̄)` where `α(x̄, ∇S_t(x̄)) = x`.
    pub fn variation_function(&self, t: f64, x: &[f64], tol: f64, max_iter: usize) -> Result<f64> {
        let sol = self.solve_source(t, x, tol, max_iter)?;
        let s = self.coefficients_at(&sol.xbar, 0)?;
        Ok(time_derivative(t, &s))
    }

    /// `∇h_t(x) = J⁻ᵀ ∇(∂_t S_t)(x̄)`.
    pub fn variation_gradient(
        &self,
        t: f64,
        x: &[f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<Vec<f64>> {
        let n = self.dim();
        let sol = self.solve_source(t, x, tol, max_iter)?;
        let (_, j, _) = self.source_residual(t, &sol.xbar, x)?;
        let s = self.coefficients_at(&sol.xbar, 1)?;
        let mut g = vec![0.0; n];
        for (idx, sj) in s.iter().enumerate() {
            let w = (idx + 1) as f64 * t.powi(idx as i32);
            for (gi, v) in g.iter_mut().zip(sj.gradient(n)) {
                *gi += w * v;
            }
        }
        let jt = DMatrix::from_fn(n, n, |r, c| j[c][r]);
        let sol = jt
            .lu()
            .solve(&DVector::from_vec(g))
            .ok_or_else(|| Error::Singular("source-map Jacobian".into()))?;
        Ok(sol.iter().copied().collect())
    }

    /// Formal expansion of the variation function `h_t(x0 + δ)` through
    /// `t^t_order` and `δ^degree`.
    pub fn variation_taylor(
        &self,
        x0: &[f64],
        t_order: usize,
        degree: usize,
    ) -> Result<TJet<MultiJet<f64>>> {
        let n = self.dim();
        let k = self.order;
        let s = self.coefficients_at(x0, t_order + degree + 1)?;
        let grads: Vec<Vec<MultiJet<f64>>> = s.iter().map(|sj| sj.grad_jets(n)).collect();
        type R = TJet<MultiJet<f64>>;
        let x: Vec<R> = MultiJet::variables(x0, degree)
            .into_iter()
            .map(|v| TJet::constant_of(v, t_order))
            .collect();
        let base: Vec<R> = x0
            .iter()
            .map(|&c| TJet::constant_of(MultiJet::constant_of(c), t_order))
            .collect();
        let mut xbar = x.clone();
        // each pass fixes one more power of t, since α(x̄, p) − x̄ = O(t)
        for _ in 0..=t_order {
            let d: Vec<R> = xbar
                .iter()
                .zip(&base)
                .map(|(a, b)| a.clone() - b.clone())
                .collect();
            let p: Vec<R> = (0..n)
                .map(|c| {
                    (0..k).fold(TJet::constant_of(MultiJet::zero(), t_order), |acc, j| {
                        acc + shift(&grads[j][c].compose(&d), j + 1, t_order)
                    })
                })
                .collect();
            let a = self.bireal.alpha(&xbar, &p)?;
            xbar = xbar
                .iter()
                .zip(a.iter().zip(&x))
                .map(|(xb, (ai, xi))| xb.clone() - (ai.clone() - xi.clone()))
                .collect();
        }
        let d: Vec<R> = xbar
            .iter()
            .zip(&base)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        let mut h = TJet::constant_of(MultiJet::zero(), t_order);
        for (j, sj) in s.iter().enumerate() {
            let term = shift(&sj.compose(&d), j, t_order).map(|c| c.scale((j + 1) as f64));
            h = h + term;
        }
        Ok(h)
    }
}

fn poly(t: f64, coeffs: impl DoubleEndedIterator<Item = f64>) -> f64 {
    // Σ_{j≥1} t^j c_j
    coeffs.rev().fold(0.0, |acc, c| (acc + c) * t)
}

fn time_derivative(t: f64, s: &[MultiJet<f64>]) -> f64 {
    s.iter()
        .enumerate()
        .map(|(j, sj)| (j + 1) as f64 * t.powi(j as i32) * sj.value())
        .sum()
}

/// Build the order-`k` truncated generating function of `h` on `b`.
pub fn hj_coefficients(h: &Expr, b: &BiRealisation, k: usize) -> Result<GeneratingFunction> {
    if !(1..=MAX_ORDER).contains(&k) {
        return Err(Error::invalid(format!(
            "order k = {k} outside the supported range 1..={MAX_ORDER}"
        )));
    }
    if h.arity() > b.dim() {
        return Err(Error::invalid(format!(
            "Hamiltonian uses {} variables, the bi-realisation has dimension {}",
            h.arity(),
            b.dim()
        )));
    }
    Ok(GeneratingFunction {
        order: k,
        bireal: b.clone(),
        hamiltonian: h.clone(),
    })
}

/// Solution of `J dx = −f`.
fn newton_update(j: &[Vec<f64>], f: &[f64]) -> Option<Vec<f64>> {
    let n = f.len();
    let jm = DMatrix::from_fn(n, n, |r, c| j[r][c]);
    let rhs = DVector::from_iterator(n, f.iter().map(|v| -v));
    jm.lu().solve(&rhs).map(|dx| dx.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::lv_matrix;

    fn harmonic() -> (Expr, BiRealisation) {
        (
            Expr::parse("(q^2 + p^2)/2", &["q", "p"]).unwrap(),
            BiRealisation::canonical_symplectic(2).unwrap(),
        )
    }

    #[test]
    fn first_coefficient_is_hamiltonian() {
        let h = Expr::parse("x1*x2 + x3^2 - x1", &["x1", "x2", "x3"]).unwrap();
        let b = BiRealisation::log_canonical(lv_matrix(3)).unwrap();
        let gf = hj_coefficients(&h, &b, 3).unwrap();
        let x = [0.3, 1.2, -0.7];
        let s = gf.coefficients_at(&x, 1).unwrap();
        assert_eq!(s.len(), 3);
        assert!((s[0].value() - h.eval(&x).unwrap()).abs() < 1e-14);
        assert_eq!(s[0].degree(), Some(3));
        assert_eq!(s[2].degree(), Some(1));
    }

    #[test]
    fn harmonic_canonical_second_and_third_coefficients() {
        let (h, b) = harmonic();
        let gf = hj_coefficients(&h, &b, 3).unwrap();
        for x in [[1.0, 0.0], [0.3, -1.7], [2.0, 2.0]] {
            let s = gf.coefficients_at(&x, 0).unwrap();
            assert!(s[1].value().abs() < 1e-13);
            // S_3 = H/12 for the harmonic oscillator
            assert!((s[2].value() - h.eval(&x).unwrap() / 12.0).abs() < 1e-13);
        }
    }

    #[test]
    fn evaluation_at_time_zero_and_single_term() {
        let (h, b) = harmonic();
        let gf1 = hj_coefficients(&h, &b, 1).unwrap();
        assert_eq!(gf1.eval_s(0.0, &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(gf1.eval_s(0.1, &[1.0, 2.0]).unwrap(), 0.1 * 2.5);
        assert_eq!(gf1.grad_s(0.0, &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        let g = gf1.grad_s(0.1, &[1.0, 2.0]).unwrap();
        assert!((g[0] - 0.1).abs() < 1e-16 && (g[1] - 0.2).abs() < 1e-16);
    }

    #[test]
    fn log_canonical_linear_hamiltonian_eval() {
        // S_2 vanishes identically for log-canonical structures, so S_t = t H here
        let h = Expr::parse("x1 + x2", &["x1", "x2"]).unwrap();
        let b = BiRealisation::log_canonical(lv_matrix(2)).unwrap();
        let gf = hj_coefficients(&h, &b, 2).unwrap();
        assert!((gf.eval_s(0.1, &[1.0, 1.0]).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn order_range_is_checked() {
        let (h, b) = harmonic();
        assert!(hj_coefficients(&h, &b, 0).is_err());
        assert!(hj_coefficients(&h, &b, 7).is_err());
    }

    #[test]
    fn variation_function_at_time_zero_is_hamiltonian() {
        let (h, b) = harmonic();
        let gf = hj_coefficients(&h, &b, 2).unwrap();
        let v = gf.variation_function(0.0, &[0.4, 1.1], 1e-12, 50).unwrap();
        assert!((v - h.eval(&[0.4, 1.1]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn midpoint_variation_function() {
        let (h, b) = harmonic();
        let gf = hj_coefficients(&h, &b, 1).unwrap();
        let x = [0.7, -0.2];
        for t in [0.1, 0.3] {
            let v = gf.variation_function(t, &x, 1e-14, 50).unwrap();
            let r = (1.0 - t * t / 4.0f64).powi(2) + t * t;
            let want = r / (1.0 + t * t / 4.0f64).powi(3) * h.eval(&x).unwrap();
            assert!((v - want).abs() < 1e-12, "{v} vs {want}");
            let jet = gf.variation_taylor(&x, 4, 0).unwrap();
            // h_t/H = 1/(1 + t²/4) = 1 − t²/4 + t⁴/16
            let hx = h.eval(&x).unwrap();
            let want_c = [1.0, 0.0, -0.25, 0.0, 0.0625];
            for (c, w) in jet.coeffs.iter().zip(want_c) {
                assert!((c.value() - w * hx).abs() < 1e-13);
            }
        }
    }
}
