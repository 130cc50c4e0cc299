use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{FromPrimitive, One, Zero};

use super::{Real, Scalar};

/// Forward-mode dual number: a value together with its gradient with respect
/// to a fixed set of seeded directions.
///
/// An empty `grad` denotes a constant and broadcasts against any width.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual<T> {
    pub value: T,
    pub grad: Vec<T>,
}

impl<T: Scalar> Dual<T> {
    pub fn new(value: T, grad: Vec<T>) -> Self {
        Self { value, grad }
    }

    pub fn constant_of(value: T) -> Self {
        Self {
            value,
            grad: Vec::new(),
        }
    }

    /// Coordinate `index` of an `n`-dimensional point, seeded with `e_index`.
    pub fn variable(value: T, index: usize, n: usize) -> Self {
        let mut grad = vec![T::zero(); n];
        grad[index] = T::one();
        Self { value, grad }
    }

    /// Gradient padded to width `n` (constants yield zeros).
    pub fn gradient(&self, n: usize) -> Vec<T> {
        if self.grad.is_empty() {
            vec![T::zero(); n]
        } else {
            self.grad.clone()
        }
    }

    /// `f(value)` with gradient `df * grad`.
    fn chain(&self, f: T, df: T) -> Self {
        Self {
            value: f,
            grad: self.grad.iter().map(|g| df.clone() * g.clone()).collect(),
        }
    }
}

fn zip_grad<T: Scalar>(a: &[T], b: &[T], f: impl Fn(&T, &T) -> T) -> Vec<T> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Vec::new(),
        (false, true) => a.iter().map(|x| f(x, &T::zero())).collect(),
        (true, false) => b.iter().map(|y| f(&T::zero(), y)).collect(),
        (false, false) => {
            assert_eq!(a.len(), b.len(), "dual gradient widths differ");
            a.iter().zip(b).map(|(x, y)| f(x, y)).collect()
        }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            grad: zip_grad(&self.grad, &rhs.grad, |a, b| a.clone() + b.clone()),
            value: self.value + rhs.value,
        }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            grad: zip_grad(&self.grad, &rhs.grad, |a, b| a.clone() - b.clone()),
            value: self.value - rhs.value,
        }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (u, v) = (&self.value, &rhs.value);
        Self {
            grad: zip_grad(&self.grad, &rhs.grad, |a, b| {
                a.clone() * v.clone() + u.clone() * b.clone()
            }),
            value: self.value.clone() * rhs.value.clone(),
        }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.value.clone() / rhs.value.clone();
        let (v, qq) = (&rhs.value, &q);
        Self {
            grad: zip_grad(&self.grad, &rhs.grad, |a, b| {
                (a.clone() - qq.clone() * b.clone()) / v.clone()
            }),
            value: q.clone(),
        }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: -self.value,
            grad: self.grad.into_iter().map(|g| -g).collect(),
        }
    }
}

impl<T: Scalar> Zero for Dual<T> {
    fn zero() -> Self {
        Self::constant_of(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.value.is_zero() && self.grad.iter().all(Zero::is_zero)
    }
}

impl<T: Scalar> One for Dual<T> {
    fn one() -> Self {
        Self::constant_of(T::one())
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    type Real = T::Real;

    fn constant(value: T::Real) -> Self {
        Self::constant_of(T::constant(value))
    }
    fn value(&self) -> T::Real {
        self.value.value()
    }
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(Scalar::is_finite)
    }
    fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e.clone(), e)
    }
    fn ln(&self) -> Self {
        self.chain(self.value.ln(), self.value.recip())
    }
    fn sin(&self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn recip(&self) -> Self {
        let r = self.value.recip();
        self.chain(r.clone(), -(r.clone() * r))
    }
    fn powf(&self, e: T::Real) -> Self {
        let d = self.value.powf(e - T::Real::one()).scale(e);
        self.chain(self.value.powf(e), d)
    }
    fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        let d = s.recip().scale(T::Real::lit(0.5));
        self.chain(s, d)
    }
    fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let d = self.value.powi(n - 1).scale(T::Real::from_i32(n).unwrap());
        self.chain(self.value.powi(n), d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcalc::TJet;

    #[test]
    fn leibniz_rule_is_exact() {
        let x = Dual::variable(1.5, 0, 2);
        let y = Dual::variable(-0.5, 1, 2);
        let p = x.clone() * y.clone();
        assert_eq!(p.grad, vec![-0.5, 1.5]);
        let q = x / y;
        assert_eq!(q.value, -3.0);
        assert_eq!(q.grad, vec![-2.0, -6.0]);
    }

    #[test]
    fn constants_broadcast() {
        let x = Dual::variable(2.0, 0, 3);
        let c = Dual::<f64>::constant(3.0);
        let s = c.clone() + x.clone();
        assert_eq!(s.grad, vec![1.0, 0.0, 0.0]);
        let m = c * x;
        assert_eq!(m.grad, vec![3.0, 0.0, 0.0]);
        assert_eq!(Dual::<f64>::one().gradient(2), vec![0.0, 0.0]);
    }

    #[test]
    fn dual_over_jets_nests() {
        // d/dx of (x t)^2 at x = 2 as a polynomial in t: 4 t^2.
        let t = TJet::variable(0.0, 2);
        let x = Dual::variable(TJet::constant_of(2.0, 2), 0, 1);
        let y = (x * Dual::constant_of(t)).powi(2);
        assert_eq!(y.grad[0].coeffs, vec![0.0, 0.0, 4.0]);
    }

    #[test]
    fn analytic_derivatives() {
        let x = Dual::variable(0.7f64, 0, 1);
        let h = 1e-6;
        for (name, d, f) in [
            (
                "sin",
                x.sin().grad[0],
                (0.7f64 + h).sin() - (0.7f64 - h).sin(),
            ),
            (
                "cos",
                x.cos().grad[0],
                (0.7f64 + h).cos() - (0.7f64 - h).cos(),
            ),
            (
                "sqrt",
                x.sqrt().grad[0],
                (0.7f64 + h).sqrt() - (0.7f64 - h).sqrt(),
            ),
            (
                "recip",
                x.recip().grad[0],
                1.0 / (0.7 + h) - 1.0 / (0.7 - h),
            ),
            (
                "powf",
                x.powf(2.5).grad[0],
                (0.7f64 + h).powf(2.5) - (0.7f64 - h).powf(2.5),
            ),
        ] {
            let fd = f / (2.0 * h);
            assert!((d - fd).abs() < 1e-8, "{name}: {d} vs {fd}");
        }
    }
}
