use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{FromPrimitive, One, Zero};

use super::{Ring, Scalar};
use crate::error::{Error, Result};

/// Truncated polynomial `Σ_{j=0..k} c_j t^j` with coefficients in a ring.
///
/// Operators truncate at the smaller order of the two operands. A jet with a
/// single coefficient (as produced by `zero`, `one` and `constant`) is a
/// constant and broadcasts against jets of any order; use [`jet_add`],
/// [`jet_mul`] for order-checked arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct TJet<T> {
    pub coeffs: Vec<T>,
}

impl<T: Ring> TJet<T> {
    /// Jet of order `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Self { coeffs }
    }

    pub fn constant_of(c: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    /// The path `c + t`.
    pub fn variable(c: T, order: usize) -> Self {
        let mut j = Self::constant_of(c, order);
        if order > 0 {
            j.coeffs[1] = T::one();
        }
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, j: usize) -> T {
        self.coeffs.get(j).cloned().unwrap_or_else(T::zero)
    }

    pub fn truncate(mut self, order: usize) -> Self {
        self.coeffs.truncate(order + 1);
        self
    }

    /// Multiply every coefficient by `s`.
    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Horner evaluation at a ring element.
    pub fn eval_at(&self, t: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * t.clone() + c.clone())
    }

    /// Formal time derivative; the order drops by one (order 0 gives zero).
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::new(vec![T::zero()]);
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        let mut n = T::one();
        for c in &self.coeffs[1..] {
            out.push(n.clone() * c.clone());
            n = n + T::one();
        }
        Self::new(out)
    }

    fn result_len(&self, rhs: &Self) -> usize {
        match (self.coeffs.len(), rhs.coeffs.len()) {
            (1, n) | (n, 1) => n,
            (a, b) => a.min(b),
        }
    }
}

/// `a + b` with both operands required to have the same order.
pub fn jet_add<T: Ring>(a: &TJet<T>, b: &TJet<T>) -> Result<TJet<T>> {
    same_order(a, b)?;
    Ok(a.clone() + b.clone())
}

/// `a · b` truncated at the common order.
pub fn jet_mul<T: Ring>(a: &TJet<T>, b: &TJet<T>) -> Result<TJet<T>> {
    same_order(a, b)?;
    Ok(a.clone() * b.clone())
}

/// `s · a` for a coefficient-ring scalar `s`.
pub fn jet_scale<T: Ring>(a: &TJet<T>, s: &T) -> TJet<T> {
    a.map(|c| c.clone() * s.clone())
}

fn same_order<T: Ring>(a: &TJet<T>, b: &TJet<T>) -> Result<()> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch {
            left: a.order(),
            right: b.order(),
        });
    }
    Ok(())
}

impl<T: Ring> Add for TJet<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let n = self.result_len(&rhs);
        Self {
            coeffs: (0..n).map(|j| self.coeff(j) + rhs.coeff(j)).collect(),
        }
    }
}

impl<T: Ring> Sub for TJet<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let n = self.result_len(&rhs);
        Self {
            coeffs: (0..n).map(|j| self.coeff(j) - rhs.coeff(j)).collect(),
        }
    }
}

impl<T: Ring> Mul for TJet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let n = self.result_len(&rhs);
        let (a, b) = (&self.coeffs, &rhs.coeffs);
        let coeffs = (0..n)
            .map(|j| {
                let lo = j.saturating_sub(b.len() - 1);
                let hi = j.min(a.len() - 1);
                (lo..=hi).fold(T::zero(), |acc, i| acc + a[i].clone() * b[j - i].clone())
            })
            .collect();
        Self { coeffs }
    }
}

impl<T: Ring> Neg for TJet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            coeffs: self.coeffs.into_iter().map(|c| -c).collect(),
        }
    }
}

impl<T: Scalar> Div for TJet<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        if rhs.coeffs.len() == 1 {
            let r = rhs.coeffs[0].recip();
            return self.map(|c| c.clone() * r.clone());
        }
        self * rhs.recip()
    }
}

impl<T: Ring> Zero for TJet<T> {
    fn zero() -> Self {
        Self::new(vec![T::zero()])
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }
}

impl<T: Ring> One for TJet<T> {
    fn one() -> Self {
        Self::new(vec![T::one()])
    }
}

impl<T: Scalar> TJet<T> {
    fn inv_n(n: usize) -> T::Real {
        T::Real::one() / T::Real::from_usize(n).unwrap()
    }

    fn nat(n: usize) -> T::Real {
        T::Real::from_usize(n).unwrap()
    }
}

impl<T: Scalar> Scalar for TJet<T> {
    type Real = T::Real;

    fn constant(value: T::Real) -> Self {
        Self::new(vec![T::constant(value)])
    }

    fn value(&self) -> T::Real {
        self.coeffs[0].value()
    }

    fn is_finite(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_finite)
    }

    fn exp(&self) -> Self {
        let a = &self.coeffs;
        let mut b = vec![a[0].exp()];
        for n in 1..a.len() {
            let s = (1..=n).fold(T::zero(), |acc, k| {
                acc + (a[k].clone() * b[n - k].clone()).scale(Self::nat(k))
            });
            b.push(s.scale(Self::inv_n(n)));
        }
        Self::new(b)
    }

    fn ln(&self) -> Self {
        let a = &self.coeffs;
        let r = a[0].recip();
        let mut b = vec![a[0].ln()];
        for n in 1..a.len() {
            let s = (1..n).fold(T::zero(), |acc, k| {
                acc + (b[k].clone() * a[n - k].clone()).scale(Self::nat(k))
            });
            b.push((a[n].clone() - s.scale(Self::inv_n(n))) * r.clone());
        }
        Self::new(b)
    }

    fn sin(&self) -> Self {
        self.sin_cos().0
    }

    fn cos(&self) -> Self {
        self.sin_cos().1
    }

    fn recip(&self) -> Self {
        let a = &self.coeffs;
        let r = a[0].recip();
        let mut b = vec![r.clone()];
        for n in 1..a.len() {
            let s = (1..=n).fold(T::zero(), |acc, k| acc + a[k].clone() * b[n - k].clone());
            b.push(-(s * r.clone()));
        }
        Self::new(b)
    }

    fn powf(&self, e: T::Real) -> Self {
        let a = &self.coeffs;
        let r = a[0].recip();
        let mut b = vec![a[0].powf(e)];
        for n in 1..a.len() {
            let s = (1..=n).fold(T::zero(), |acc, k| {
                let w = e * Self::nat(k) - Self::nat(n - k);
                acc + (a[k].clone() * b[n - k].clone()).scale(w)
            });
            b.push(s.scale(Self::inv_n(n)) * r.clone());
        }
        Self::new(b)
    }
}

impl<T: Scalar> TJet<T> {
    fn sin_cos(&self) -> (Self, Self) {
        let a = &self.coeffs;
        let mut s = vec![a[0].sin()];
        let mut c = vec![a[0].cos()];
        for n in 1..a.len() {
            let (mut ss, mut cc) = (T::zero(), T::zero());
            for k in 1..=n {
                let ka = a[k].scale(Self::nat(k));
                ss = ss + ka.clone() * c[n - k].clone();
                cc = cc + ka * s[n - k].clone();
            }
            s.push(ss.scale(Self::inv_n(n)));
            c.push(-cc.scale(Self::inv_n(n)));
        }
        (Self::new(s), Self::new(c))
    }
}
