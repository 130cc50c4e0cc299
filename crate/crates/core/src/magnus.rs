//! Magnus series of a time-dependent Hamiltonian: the `ε`-dependent
//! Hamiltonian `Ω_ε = Σ_i εⁱ Ω_i` whose time-1 flow is the time-`ε` flow of
//! `h_t`. It solves
//!
//! ```text
//! Ω_0 = 0,    ∂_ε Ω_ε = Σ_m (B_m / m!) ad^m_{Ω_ε} h_ε,    ad_Ω = {Ω, ·}
//! ```
//!
//! coefficient by coefficient in `ε`, so `Ω_1 = h_0`, `Ω_2 = c_1 / 2` and
//! `Ω_3 = c_2 / 3 − {c_0, c_1} / 12` where `h_t = Σ_j t^j c_j`. Fields are
//! local Taylor expansions at the evaluation point; every bracket costs one
//! degree, so the input is expanded `k − 1` degrees beyond the output.

use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hjsolver::{GeneratingFunction, MAX_ORDER};
use crate::integrator::ReferenceSolver;
use crate::jetcalc::{dual_lift_all, MultiJet, Scalar, TJet};
use crate::poisson::PoissonStructure;

/// Largest index served by [`bernoulli`].
pub const MAX_BERNOULLI: usize = 16;

/// Bernoulli number `B_i` from `x / (eˣ − 1) = Σ B_i xⁱ / i!`, so `B_1 = −1/2`.
pub fn bernoulli(i: usize) -> Result<Ratio<i64>> {
    if i > MAX_BERNOULLI {
        return Err(Error::Index {
            index: i,
            dim: MAX_BERNOULLI + 1,
        });
    }
    // Σ_{j=0..m} C(m+1, j) B_j = 0
    let mut b: Vec<Ratio<i64>> = vec![Ratio::from_integer(1)];
    for m in 1..=i {
        let mut acc = Ratio::zero();
        let mut c = 1i64;
        for (j, bj) in b.iter().enumerate() {
            acc += *bj * c;
            c = c * (m as i64 + 1 - j as i64) / (j as i64 + 1);
        }
        b.push(-acc / (m as i64 + 1));
    }
    Ok(b[i])
}

/// A family `h_t` of Hamiltonians on `ℝⁿ`.
pub trait TimeDepHamiltonian: Send + Sync {
    fn dim(&self) -> usize;

    /// `h_t(x0 + δ) = Σ_j t^j c_j(δ)` through `t^t_order`, each `c_j` to degree `degree` in `δ`.
    fn taylor(&self, x0: &[f64], t_order: usize, degree: usize) -> Result<TJet<MultiJet<f64>>>;

    /// `∇h_t(x)`.
    fn gradient(&self, t: f64, x: &[f64]) -> Result<Vec<f64>>;
}

/// `h_t` given by an expression over `x0..x{n-1}` followed by `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprFamily {
    pub expr: Expr,
    pub dim: usize,
}

impl ExprFamily {
    pub fn new(expr: Expr, dim: usize) -> Result<Self> {
        if expr.arity() > dim + 1 {
            return Err(Error::invalid(format!(
                "expression uses {} variables, family has {dim} plus time",
                expr.arity()
            )));
        }
        Ok(Self { expr, dim })
    }

    /// Parse with spatial variables `vars` and time variable `time`.
    pub fn parse(text: &str, vars: &[&str], time: &str) -> Result<Self> {
        let mut all = vars.to_vec();
        all.push(time);
        Self::new(Expr::parse(text, &all)?, vars.len())
    }

    /// A time-independent family.
    pub fn constant(h: Expr, dim: usize) -> Result<Self> {
        if h.arity() > dim {
            return Err(Error::invalid(format!(
                "expression uses {} variables, dimension is {dim}",
                h.arity()
            )));
        }
        Ok(Self { expr: h, dim })
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl TimeDepHamiltonian for ExprFamily {
    fn dim(&self) -> usize {
        self.dim
    }

    fn taylor(&self, x0: &[f64], t_order: usize, degree: usize) -> Result<TJet<MultiJet<f64>>> {
        self.check(x0)?;
        let mut args: Vec<TJet<MultiJet<f64>>> = MultiJet::variables(x0, degree)
            .into_iter()
            .map(|v| TJet::constant_of(v, t_order))
            .collect();
        args.push(TJet::variable(MultiJet::zero(), t_order));
        self.expr.eval(&args)
    }

    fn gradient(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut z = x.to_vec();
        z.push(t);
        let mut g = self.expr.eval(&dual_lift_all(&z))?.gradient(self.dim + 1);
        g.truncate(self.dim);
        Ok(g)
    }
}

/// The variation function `h_t` of a generating-function scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationHamiltonian {
    pub gf: GeneratingFunction,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl VariationHamiltonian {
    pub fn new(gf: GeneratingFunction) -> Self {
        Self {
            gf,
            newton_tol: 1e-14,
            newton_max_iter: 50,
        }
    }
}

impl TimeDepHamiltonian for VariationHamiltonian {
    fn dim(&self) -> usize {
        self.gf.dim()
    }

    fn taylor(&self, x0: &[f64], t_order: usize, degree: usize) -> Result<TJet<MultiJet<f64>>> {
        self.gf.variation_taylor(x0, t_order, degree)
    }

    fn gradient(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.gf
            .variation_gradient(t, x, self.newton_tol, self.newton_max_iter)
    }
}

/// Truncation `Ω^{(k)}_ε = Σ_{i=1..k} εⁱ Ω_i`.
#[derive(Clone)]
pub struct MagnusSeries {
    pub h: Arc<dyn TimeDepHamiltonian>,
    pub pi: PoissonStructure,
    pub order: usize,
}

impl std::fmt::Debug for MagnusSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MagnusSeries")
            .field("pi", &self.pi.name())
            .field("order", &self.order)
            .finish()
    }
}

/// `ε`-series of fields, index = power of `ε`.
type Series = Vec<MultiJet<f64>>;

/// `Σ π_ij ∂_i F ∂_j G` with `π` already expanded.
fn bracket(pi: &[Vec<MultiJet<f64>>], f: &MultiJet<f64>, g: &MultiJet<f64>) -> MultiJet<f64> {
    if f.is_constant() || g.is_constant() {
        return MultiJet::zero();
    }
    let n = pi.len();
    let df = f.grad_jets(n);
    let dg = g.grad_jets(n);
    let mut acc = MultiJet::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc = acc + pi[i][j].clone() * df[i].clone() * dg[j].clone();
            }
        }
    }
    acc
}

/// `{A, B}` truncated at `ε^top`.
fn series_bracket(pi: &[Vec<MultiJet<f64>>], a: &Series, b: &Series, top: usize) -> Series {
    (0..=top)
        .map(|m| {
            (0..=m).fold(MultiJet::zero(), |acc, i| match (a.get(i), b.get(m - i)) {
                (Some(x), Some(y)) => acc + bracket(pi, x, y),
                _ => acc,
            })
        })
        .collect()
}

impl MagnusSeries {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Local expansions of `Ω_1..Ω_k` at `x0`, each to degree `degree`.
    pub fn coefficients_at(&self, x0: &[f64], degree: usize) -> Result<Vec<MultiJet<f64>>> {
        let k = self.order;
        let top = degree + k - 1;
        let h: Series = self.h.taylor(x0, k - 1, top)?.coeffs;
        let pi = self.pi.tensor(&MultiJet::variables(x0, top))?;
        let weights: Vec<f64> = (0..k)
            .map(|m| {
                let b = bernoulli(m)?;
                let fact: i64 = (1..=m as i64).product();
                Ok((b / fact).to_f64().unwrap_or(f64::NAN))
            })
            .collect::<Result<_>>()?;
        let mut omega: Series = vec![MultiJet::zero()];
        for i in 0..k {
            // ad^m_Ω h starts at ε^m, so m ≤ i suffices for the ε^i coefficient
            let mut term: Series = h.iter().take(i + 1).cloned().collect();
            let mut rhs = term[i].clone();
            for w in weights.iter().take(i + 1).skip(1) {
                term = series_bracket(&pi, &omega, &term, i);
                if *w != 0.0 {
                    rhs = rhs + term[i].scale(*w);
                }
            }
            omega.push(rhs.scale(1.0 / (i + 1) as f64));
        }
        let out: Vec<MultiJet<f64>> = omega
            .into_iter()
            .skip(1)
            .map(|w| {
                if w.is_constant() {
                    w
                } else {
                    w.truncate(degree)
                }
            })
            .collect();
        Ok(out)
    }

    /// `(Ω_1(x), …, Ω_k(x))`.
    pub fn values(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .coefficients_at(x, 0)?
            .iter()
            .map(|w| w.value())
            .collect())
    }

    /// `Ω^{(k)}_ε(x)`.
    pub fn eval(&self, eps: f64, x: &[f64]) -> Result<f64> {
        Ok(self
            .values(x)?
            .iter()
            .rev()
            .fold(0.0, |acc, w| (acc + w) * eps))
    }

    /// `∇Ω^{(k)}_ε(x)`.
    pub fn gradient(&self, eps: f64, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut g = vec![0.0; n];
        let mut e = 1.0;
        for w in self.coefficients_at(x, 1)? {
            e *= eps;
            for (gi, v) in g.iter_mut().zip(w.gradient(n)) {
                *gi += e * v;
            }
        }
        Ok(g)
    }
}

/// Magnus truncation of order `k` of `h` for the bracket `pi`.
pub fn magnus_truncate(
    h: Arc<dyn TimeDepHamiltonian>,
    pi: PoissonStructure,
    k: usize,
) -> Result<MagnusSeries> {
    if !(1..=MAX_ORDER).contains(&k) {
        return Err(Error::invalid(format!(
            "order k = {k} outside the supported range 1..={MAX_ORDER}"
        )));
    }
    if h.dim() != pi.dim() {
        return Err(Error::Dimension {
            expected: pi.dim(),
            got: h.dim(),
        });
    }
    Ok(MagnusSeries { h, pi, order: k })
}

/// The time-`ε` flow of `h_t` and the time-1 flow of `Ω^{(k)}_ε`, both from
/// `x`; they differ by `O(ε^{k+1})`.
pub fn magnus_flow_check(
    h: Arc<dyn TimeDepHamiltonian>,
    pi: &PoissonStructure,
    k: usize,
    x: &[f64],
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let series = magnus_truncate(h.clone(), pi.clone(), k)?;
    let solver = ReferenceSolver::default();
    let direct = solver.solve(&|t, y| pi.apply(y, &h.gradient(t, y)?), 0.0, eps, x)?;
    let modified = solver.solve(&|_, y| pi.apply(y, &series.gradient(eps, y)?), 0.0, 1.0, x)?;
    Ok((direct, modified))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_values() {
        let r = |a, b| Ratio::new(a, b);
        assert_eq!(bernoulli(0).unwrap(), r(1, 1));
        assert_eq!(bernoulli(1).unwrap(), r(-1, 2));
        assert_eq!(bernoulli(2).unwrap(), r(1, 6));
        assert_eq!(bernoulli(3).unwrap(), r(0, 1));
        assert_eq!(bernoulli(4).unwrap(), r(-1, 30));
        assert_eq!(bernoulli(16).unwrap(), r(-3617, 510));
        assert!(bernoulli(17).is_err());
    }

    #[test]
    fn time_independent_family_is_its_own_series() {
        let h = Expr::parse("q^3 + q*p^2", &["q", "p"]).unwrap();
        let fam = Arc::new(ExprFamily::constant(h.clone(), 2).unwrap());
        let s = magnus_truncate(fam, PoissonStructure::canonical(2).unwrap(), 4).unwrap();
        let v = s.values(&[0.7, -0.4]).unwrap();
        assert!((v[0] - h.eval(&[0.7, -0.4]).unwrap()).abs() < 1e-14);
        assert!(v[1..].iter().all(|w| w.abs() < 1e-14));
    }

    #[test]
    fn low_order_closed_forms() {
        // h_t = q + t p + t^2 q p: c0 = q, c1 = p, c2 = q p, {c0, c1} = 1
        let fam = Arc::new(ExprFamily::parse("q + t*p + t^2*q*p", &["q", "p"], "t").unwrap());
        let s = magnus_truncate(fam, PoissonStructure::canonical(2).unwrap(), 3).unwrap();
        let (q, p) = (0.3, 1.1);
        let v = s.values(&[q, p]).unwrap();
        assert!((v[0] - q).abs() < 1e-15);
        assert!((v[1] - p / 2.0).abs() < 1e-15);
        assert!((v[2] - (q * p / 3.0 - 1.0 / 12.0)).abs() < 1e-15);
    }

    #[test]
    fn order_range() {
        let fam = Arc::new(ExprFamily::parse("q", &["q", "p"], "t").unwrap());
        let pi = PoissonStructure::canonical(2).unwrap();
        assert!(magnus_truncate(fam.clone(), pi.clone(), 0).is_err());
        assert!(magnus_truncate(fam, pi, 7).is_err());
    }
}
